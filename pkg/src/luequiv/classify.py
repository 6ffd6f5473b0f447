"""Classification of bipartite states by partial transpose and eigenspace product content.

Set memberships are one-sided. A rank-one eigenspace of Schmidt rank >= 2
is product-free for sure; a product vector found by search is a proof of
the opposite; a failed search is evidence only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_OPTIONS, Options
from .linalg import BipartiteOperator, hermitian_eig, partial_transpose
from .product_opt import (
    Found,
    NotPSDError,
    Spanned,
    contains_product_vector,
    spanned_by_product_vectors,
)
from .spectral import schmidt_rank, spectral_decompose

PPT_TOL = 1e-9
EXTREMAL_TOL = 1e-8


class Membership(enum.Enum):
    PROVEN = "Proven"
    EVIDENCE = "Evidence"
    REFUTED = "Refuted"


class Extremal(enum.Enum):
    MAX_ENT_TWO_QUBIT = "MaxEntTwoQubit"
    PURE_PRODUCT = "PureProduct"
    NEITHER = "Neither"


class ProductContent(enum.Enum):
    PROVEN_FREE = "proven_product_free"
    NONE_FOUND = "none_found"
    FOUND = "found"
    FORCED = "forced_by_dimension"
    SKIPPED = "not_searched"


class SpanContent(enum.Enum):
    SPANNED = "spanned"
    NOT_SPANNED_PROVEN = "proven_not_spanned"
    NOT_SPANNED_NUMERICALLY = "not_spanned_numerically"
    SKIPPED = "not_searched"


@dataclass(frozen=True)
class EigenspaceReport:
    """Product content of one eigenspace; the kernel is listed but never searched."""

    eigenvalue: float
    multiplicity: int
    product: ProductContent
    span: SpanContent

    def to_dict(self) -> dict:
        return {
            "eigenvalue": self.eigenvalue,
            "multiplicity": self.multiplicity,
            "product": self.product.value,
            "span": self.span.value,
        }


@dataclass(frozen=True)
class StateClassification:
    dims: tuple[int, int]
    trace: float
    is_npt: bool
    is_ppt: bool
    ppt_boundary: bool
    pt_min: float
    pt_max: float
    pt_spectrum: tuple[float, ...]
    d_lambda: Membership
    d_lambda_bar: Membership
    extremal: Extremal
    separable_certified: bool
    pe_candidate: bool
    eigenspaces: tuple[EigenspaceReport, ...]

    @property
    def separability(self) -> str:
        if self.is_npt:
            return "entangled (NPT)"
        return "separable (PPT in 2x2 or 2x3)" if self.separable_certified else "not certified"

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "trace": self.trace,
            "is_npt": self.is_npt,
            "is_ppt": self.is_ppt,
            "ppt_boundary": self.ppt_boundary,
            "pt_min": self.pt_min,
            "pt_max": self.pt_max,
            "pt_spectrum": list(self.pt_spectrum),
            "d_lambda": self.d_lambda.value,
            "d_lambda_bar": self.d_lambda_bar.value,
            "extremal": self.extremal.value,
            "separable_certified": self.separable_certified,
            "separability": self.separability,
            "ppt_entangled_candidate": self.pe_candidate,
            "eigenspaces": [e.to_dict() for e in self.eigenspaces],
        }


def _check_psd(rho: BipartiteOperator) -> np.ndarray:
    w = hermitian_eig(rho.mat)[0]
    if w[0] < -PPT_TOL * max(1.0, float(np.max(np.abs(w)))):
        raise NotPSDError(f"state is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    return w


def pt_spectrum(rho: BipartiteOperator) -> np.ndarray:
    return hermitian_eig(partial_transpose(rho).mat)[0]


def detect_extremal_pt(rho: BipartiteOperator) -> Extremal:
    """Where the partial-transpose spectrum touches the ends of [-1/2, 1]."""
    tr = rho.trace()
    if abs(tr - 1.0) > 1e-9:
        raise ValueError(f"state must have unit trace (got {tr!r})")
    w = pt_spectrum(rho)
    if w[0] <= -0.5 + EXTREMAL_TOL:
        return Extremal.MAX_ENT_TWO_QUBIT
    if w[-1] >= 1.0 - EXTREMAL_TOL:
        return Extremal.PURE_PRODUCT
    return Extremal.NEITHER


def _cheap_product_content(mult: int, basis: np.ndarray, m: int, n: int) -> ProductContent | None:
    if mult == 1:
        return ProductContent.FOUND if schmidt_rank(basis[:, 0], m, n) == 1 else ProductContent.PROVEN_FREE
    # any subspace of dimension above (m-1)(n-1) meets the product variety
    if mult > (m - 1) * (n - 1):
        return ProductContent.FORCED
    return None


def classify(rho: BipartiteOperator, opts: Options = DEFAULT_OPTIONS, thorough: bool = False) -> StateClassification:
    """Classify a PSD operator.

    Unless `thorough`, product searches stop as soon as a proof settles
    both memberships; skipped eigenspaces are reported as not searched.
    """
    _check_psd(rho)
    m, n = rho.dims
    tr = rho.trace()
    pt = pt_spectrum(rho)
    pt_min, pt_max = float(pt[0]), float(pt[-1])
    is_npt = pt_min < -PPT_TOL
    boundary = abs(pt_min) <= PPT_TOL

    spec = spectral_decompose(rho, opts.group_tol)
    # the kernel is not an eigenspace of the state for membership purposes
    kernel = [abs(lam) <= PPT_TOL * max(1.0, abs(tr)) for lam in spec.eigenvalues]
    product = [None if z else _cheap_product_content(k, b, m, n)
               for k, b, z in zip(spec.multiplicities, spec.bases, kernel)]
    proven = ProductContent.PROVEN_FREE in product
    for j, content in enumerate(product):
        if kernel[j]:
            product[j] = ProductContent.SKIPPED
            continue
        if content is None:
            if proven and not thorough:
                product[j] = ProductContent.SKIPPED
                continue
            res = contains_product_vector(spec.projectors[j], opts.restarts, opts.product_tol, opts.seed)
            product[j] = ProductContent.FOUND if isinstance(res, Found) else ProductContent.NONE_FOUND

    if proven:
        d_lambda = Membership.PROVEN
    elif ProductContent.NONE_FOUND in product:
        d_lambda = Membership.EVIDENCE
    else:
        d_lambda = Membership.REFUTED

    span = []
    for j, content in enumerate(product):
        if kernel[j]:
            span.append(SpanContent.SKIPPED)
        elif content is ProductContent.PROVEN_FREE:
            span.append(SpanContent.NOT_SPANNED_PROVEN)
        elif content is ProductContent.NONE_FOUND:
            span.append(SpanContent.NOT_SPANNED_NUMERICALLY)
        elif spec.multiplicities[j] == 1 and content is ProductContent.FOUND:
            span.append(SpanContent.SPANNED)
        elif d_lambda is not Membership.REFUTED and not thorough:
            span.append(SpanContent.SKIPPED)
        else:
            res = spanned_by_product_vectors(spec.projectors[j], opts.restarts, opts.product_tol, opts.seed)
            span.append(SpanContent.SPANNED if isinstance(res, Spanned) else SpanContent.NOT_SPANNED_NUMERICALLY)

    if SpanContent.NOT_SPANNED_PROVEN in span:
        d_lambda_bar = Membership.PROVEN
    elif SpanContent.NOT_SPANNED_NUMERICALLY in span:
        d_lambda_bar = Membership.EVIDENCE
    else:
        d_lambda_bar = Membership.REFUTED

    extremal = detect_extremal_pt(rho.scaled(1.0 / tr)) if tr > 0 else Extremal.NEITHER
    separable = (not is_npt) and m * n <= 6
    pe = False
    if not is_npt and not separable:
        range_proj = rho.like(sum(p.mat for p, z in zip(spec.projectors, kernel) if not z))
        res = contains_product_vector(range_proj, opts.restarts, opts.product_tol, opts.seed)
        pe = not isinstance(res, Found)

    reports = tuple(
        EigenspaceReport(lam, k, pc, sc)
        for lam, k, pc, sc in zip(spec.eigenvalues, spec.multiplicities, product, span)
    )
    return StateClassification(
        dims=(m, n),
        trace=tr,
        is_npt=is_npt,
        is_ppt=not is_npt,
        ppt_boundary=boundary,
        pt_min=pt_min,
        pt_max=pt_max,
        pt_spectrum=tuple(float(x) for x in pt),
        d_lambda=d_lambda,
        d_lambda_bar=d_lambda_bar,
        extremal=extremal,
        separable_certified=separable,
        pe_candidate=pe,
        eigenspaces=reports,
    )
