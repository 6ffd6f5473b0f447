"""Entanglement witnesses built from states, the way back, and UPB states.

A witness is a Hermitian operator with a negative eigenvalue that is
nonnegative on every product vector. Block positivity is checked with the
product-state seesaw, so a VerifiedEW is as strong as that search.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import DEFAULT_OPTIONS, TOL, Options
from .linalg import BipartiteOperator, eigvalsh, partial_transpose
from .product_opt import ProductVector, max_product_overlap, min_product_overlap
from .spectral import spectral_decompose

SIGN_TOL = 1e-9


class WitnessConstructionError(ValueError):
    pass


class WitnessStatus(enum.Enum):
    VERIFIED_EW = "VerifiedEW"
    NOT_BLOCK_POSITIVE = "NotBlockPositive"
    POSITIVE_SEMIDEFINITE = "PositiveSemidefinite"
    UNVERIFIED = "Unverified"


@dataclass(frozen=True, eq=False)
class WitnessCandidate:
    op: BipartiteOperator
    min_eigenvalue: float
    min_product_value: float
    status: WitnessStatus
    violating: ProductVector | None = None

    @property
    def is_witness(self) -> bool:
        return self.status is WitnessStatus.VERIFIED_EW

    def to_dict(self) -> dict:
        out = {
            "status": self.status.value,
            "min_eigenvalue": self.min_eigenvalue,
            "min_product_value": self.min_product_value,
            "operator": self.op.to_dict(),
        }
        if self.violating is not None:
            out["violating_vector"] = self.violating.to_dict()
        return out


def verify_witness(w: BipartiteOperator, opts: Options = DEFAULT_OPTIONS) -> WitnessCandidate:
    """Classify a Hermitian operator as witness, non-block-positive, or PSD."""
    lam_min = float(eigvalsh(w.mat)[0])
    # the seesaw wants a PSD operator; shift up, then report unshifted
    c = max(0.0, -lam_min) + 1.0
    opt = min_product_overlap(w.shifted(c), opts.restarts, opts.seed, opts.iter_tol, opts.max_iter)
    value = opt.value - c
    if lam_min >= -SIGN_TOL:
        return WitnessCandidate(w, lam_min, value, WitnessStatus.POSITIVE_SEMIDEFINITE)
    if value < -SIGN_TOL:
        return WitnessCandidate(w, lam_min, value, WitnessStatus.NOT_BLOCK_POSITIVE, opt.vector)
    return WitnessCandidate(w, lam_min, value, WitnessStatus.VERIFIED_EW)


def witness_from_state_top(rho1: BipartiteOperator, rho2: BipartiteOperator,
                           opts: Options = DEFAULT_OPTIONS) -> tuple[WitnessCandidate, WitnessCandidate, float]:
    """W_i = mu I - rho_i with mu the largest product expectation over both states.

    When a top eigenspace holds a product vector, mu reaches the top
    eigenvalue and both operators come back flagged PositiveSemidefinite.
    """
    if rho1.dims != rho2.dims:
        raise ValueError(f"dims {rho1.dims} vs {rho2.dims}")
    top1 = float(eigvalsh(rho1.mat)[-1])
    top2 = float(eigvalsh(rho2.mat)[-1])
    if abs(top1 - top2) > opts.invariant_tol * (1 + abs(top1)):
        raise ValueError(f"top eigenvalues differ: {top1!r} vs {top2!r}")
    mu = max(
        max_product_overlap(rho, opts.restarts, opts.seed, opts.iter_tol, opts.max_iter).value
        for rho in (rho1, rho2)
    )
    w1 = rho1.scaled(-1.0).shifted(mu)
    w2 = rho2.scaled(-1.0).shifted(mu)
    if mu >= top1 - SIGN_TOL:
        return (
            WitnessCandidate(w1, mu - top1, 0.0, WitnessStatus.POSITIVE_SEMIDEFINITE),
            WitnessCandidate(w2, mu - top2, 0.0, WitnessStatus.POSITIVE_SEMIDEFINITE),
            mu,
        )
    return verify_witness(w1, opts), verify_witness(w2, opts), mu


def witness_from_eigenspace(rho: BipartiteOperator, j: int, opts: Options = DEFAULT_OPTIONS,
                            safety: float = 0.99) -> tuple[WitnessCandidate, float]:
    """W = -mu P_j + sum_{i != j} lam_i P_i for a full-rank state.

    mu = safety * p_min / p_max, where p_max is the largest product overlap
    with P_j and p_min the smallest product expectation of the rest.
    """
    spec = spectral_decompose(rho, opts.group_tol)
    if spec.eigenvalues[-1] <= TOL.psd:
        raise WitnessConstructionError("state must have full rank")
    if not 0 <= j < len(spec):
        raise IndexError(f"eigenvalue index {j} out of range (have {len(spec)})")
    pj = spec.projectors[j]
    rest = sum((lam * p.mat for i, (lam, p) in enumerate(zip(spec.eigenvalues, spec.projectors)) if i != j),
               np.zeros_like(rho.mat))
    rest = rho.like(rest)
    p_max = max_product_overlap(pj, opts.restarts, opts.seed, opts.iter_tol, opts.max_iter).value
    p_min = min_product_overlap(rest, opts.restarts, opts.seed, opts.iter_tol, opts.max_iter).value
    if p_max <= SIGN_TOL:
        # every mu > 0 works; keep the scale of the replaced eigenvalue
        mu = spec.eigenvalues[j]
    elif p_min <= SIGN_TOL:
        raise WitnessConstructionError(
            f"eigenspace {j} admits product vectors (p_max={p_max:.6g}) while the rest vanishes on "
            f"a product vector (p_min={p_min:.3g}); no admissible mu"
        )
    else:
        mu = safety * p_min / p_max
    w = rho.like(rest.mat - mu * pj.mat)
    return verify_witness(w, opts), mu


def state_from_witness(w: BipartiteOperator, x: float | str = "auto") -> BipartiteOperator:
    """rho_x = W + x I; "auto" picks x = max(0, -lam_min) + 1."""
    lam_min = float(eigvalsh(w.mat)[0])
    if x == "auto":
        x = max(0.0, -lam_min) + 1.0
    x = float(x)
    if x < -lam_min - TOL.psd:
        raise ValueError(f"shift {x} leaves a negative eigenvalue (need x >= {-lam_min})")
    return w.shifted(x)


def ppt_guarantee_x(w: BipartiteOperator) -> float:
    """Smallest x making both W + xI and its partial transpose PSD."""
    lam = float(eigvalsh(w.mat)[0])
    lam_pt = float(eigvalsh(partial_transpose(w).mat)[0])
    return max(0.0, -lam, -lam_pt)


def positive_relabel(h: BipartiteOperator, new_eigenvalues: Sequence[float],
                     group_tol: float = DEFAULT_OPTIONS.group_tol) -> BipartiteOperator:
    """Keep the spectral projectors of h, replace its spectrum.

    new_eigenvalues[k] goes to the projector of the k-th largest eigenvalue.
    """
    spec = spectral_decompose(h, group_tol)
    mus = [float(v) for v in new_eigenvalues]
    if len(mus) != len(spec):
        raise ValueError(f"need {len(spec)} eigenvalues, got {len(mus)}")
    if any(v <= 0 for v in mus):
        raise ValueError("new eigenvalues must be positive")
    if any(a <= b for a, b in zip(mus, mus[1:])):
        raise ValueError("new eigenvalues must be strictly descending")
    out = sum(mu * p.mat for mu, p in zip(mus, spec.projectors))
    return h.like(out)


@dataclass(frozen=True, eq=False)
class UpbSpec:
    members: tuple[ProductVector, ...]
    dims: tuple[int, int]

    def __post_init__(self):
        m, n = self.dims
        vecs = [v.vector() for v in self.members]
        for v in self.members:
            if (v.a.shape[0], v.b.shape[0]) != (m, n):
                raise ValueError(f"member of dims {(v.a.shape[0], v.b.shape[0])} in a {m}x{n} UPB")
        for i in range(len(vecs)):
            for k in range(i + 1, len(vecs)):
                overlap = abs(np.vdot(vecs[i], vecs[k]))
                if overlap > TOL.orthonormality:
                    raise ValueError(f"members {i} and {k} are not orthogonal (overlap {overlap:.3e})")


def upb_state(upb: UpbSpec) -> BipartiteOperator:
    """sigma = (I - sum_i |a_i b_i><a_i b_i|) / (mn - l)."""
    m, n = upb.dims
    l = len(upb.members)
    if l >= m * n:
        raise ValueError(f"{l} members leave no complement in dimension {m * n}")
    p = sum((np.outer(v.vector(), v.vector().conj()) for v in upb.members), np.zeros((m * n, m * n), complex))
    return BipartiteOperator(m, n, (np.eye(m * n) - p) / (m * n - l))


def tiles_upb() -> UpbSpec:
    """The five-member Tiles UPB in 3x3."""
    e = np.eye(3)
    s = 1 / np.sqrt(2)
    members = (
        ProductVector(e[0], s * (e[0] - e[1])),
        ProductVector(s * (e[0] - e[1]), e[2]),
        ProductVector(e[2], s * (e[1] - e[2])),
        ProductVector(s * (e[1] - e[2]), e[0]),
        ProductVector(np.ones(3) / np.sqrt(3), np.ones(3) / np.sqrt(3)),
    )
    return UpbSpec(members, (3, 3))
