"""Local-unitary equivalence of bipartite Hermitian operators."""

from .classify import Membership, StateClassification, classify, detect_extremal_pt, pt_spectrum
from .config import DEFAULT_OPTIONS, TOL, Options
from .equivalence import (
    Certificate,
    Equivalent,
    FiniteLuGroup,
    Inequivalent,
    Undecided,
    decide_lu,
    decide_slu,
    local_pauli_group,
    twirl_finite,
)
from .linalg import BipartiteOperator, LocalUnitary, partial_trace, partial_transpose
from .product_opt import contains_product_vector, max_product_overlap, min_product_overlap, spanned_by_product_vectors
from .spectral import spectral_decompose
from .witness import (
    WitnessStatus,
    state_from_witness,
    verify_witness,
    witness_from_eigenspace,
    witness_from_state_top,
)

__all__ = [
    "BipartiteOperator", "Certificate", "DEFAULT_OPTIONS", "Equivalent", "FiniteLuGroup", "Inequivalent",
    "LocalUnitary", "Membership", "Options", "StateClassification", "TOL", "Undecided", "WitnessStatus",
    "classify", "contains_product_vector", "decide_lu", "decide_slu", "detect_extremal_pt", "local_pauli_group",
    "max_product_overlap", "min_product_overlap", "partial_trace", "partial_transpose", "pt_spectrum",
    "spanned_by_product_vectors", "spectral_decompose", "state_from_witness", "twirl_finite", "verify_witness",
    "witness_from_eigenspace", "witness_from_state_top",
]
