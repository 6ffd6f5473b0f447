"""Optimization of <a,b|H|a,b> over unit product vectors.

All searches are seesaw iterations: with one local vector fixed, the
expectation is a Hermitian form in the other, so the best choice is an
extreme eigenvector of the conditioned local matrix. Results are one-sided:
a maximum found is a lower bound on the true maximum, a minimum found is an
upper bound on the true minimum. Finding a product vector in a subspace is a
proof; failing to find one is only evidence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .config import DEFAULT_OPTIONS, TOL
from .linalg import BipartiteOperator, projector_onto

Seed = int | Sequence[int]


class NotPSDError(ValueError):
    pass


class NotProjectorError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ProductVector:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=complex).reshape(-1)
        b = np.asarray(self.b, dtype=complex).reshape(-1)
        if abs(np.linalg.norm(a) - 1) > 1e-12 or abs(np.linalg.norm(b) - 1) > 1e-12:
            raise ValueError("product vector factors must be unit vectors")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def normalized(cls, a, b) -> "ProductVector":
        a = np.asarray(a, dtype=complex)
        b = np.asarray(b, dtype=complex)
        return cls(a / np.linalg.norm(a), b / np.linalg.norm(b))

    def vector(self) -> np.ndarray:
        return np.kron(self.a, self.b)

    def expectation(self, h: np.ndarray) -> float:
        x = self.vector()
        return float(np.real(x.conj() @ h @ x))

    def to_dict(self) -> dict:
        return {
            "a": [[float(z.real), float(z.imag)] for z in self.a],
            "b": [[float(z.real), float(z.imag)] for z in self.b],
        }


@dataclass(frozen=True)
class ProductOptimum:
    value: float
    vector: ProductVector
    restarts_used: int
    spread: float


@dataclass
class SeesawRun:
    value: float
    a: np.ndarray
    b: np.ndarray
    history: list[float] = field(default_factory=list)


def _conditioned(h: np.ndarray, m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    # ta @ (conj(b) (x) b) gives the m x m matrix <., b|h|., b>, flattened;
    # tb @ (conj(a) (x) a) gives <a, .|h|a, .>
    t = np.asarray(h, dtype=complex).reshape(m, n, m, n)
    ta = t.transpose(0, 2, 1, 3).reshape(m * m, n * n)
    tb = t.transpose(1, 3, 0, 2).reshape(n * n, m * m)
    return ta, tb


def _extreme_vec(mat: np.ndarray, maximize: bool) -> tuple[float, np.ndarray]:
    w, v = np.linalg.eigh(mat)
    k = -1 if maximize else 0
    return float(w[k]), v[:, k]


def seesaw(h: np.ndarray, m: int, n: int, a0: np.ndarray, b0: np.ndarray, maximize: bool = True,
           iter_tol: float = 1e-12, max_iter: int = 500) -> SeesawRun:
    """One seesaw run from the product start (a0, b0).

    ``history`` holds the objective after every half-step; it is monotone
    (nondecreasing for ascent, nonincreasing for descent) up to rounding.
    """
    ta, tb = _conditioned(h, m, n)
    a = a0 / np.linalg.norm(a0)
    b = b0 / np.linalg.norm(b0)
    x = np.outer(a, b).ravel()
    value = float(np.real(x.conj() @ np.asarray(h) @ x))
    history = [value]
    for _ in range(max_iter):
        prev = value
        value, a = _extreme_vec((ta @ np.outer(b.conj(), b).ravel()).reshape(m, m), maximize)
        history.append(value)
        value, b = _extreme_vec((tb @ np.outer(a.conj(), a).ravel()).reshape(n, n), maximize)
        history.append(value)
        if abs(value - prev) < iter_tol:
            break
    return SeesawRun(value, a, b, history)


def _random_start(m: int, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    a = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return a / np.linalg.norm(a), b / np.linalg.norm(b)


def _child_rngs(seed: Seed, count: int) -> list[np.random.Generator]:
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(c) for c in ss.spawn(count)]


def _check_psd(h: BipartiteOperator) -> None:
    lam_min = float(np.linalg.eigvalsh(h.mat)[0])
    if lam_min < -TOL.psd:
        raise NotPSDError(f"operator is not positive semidefinite (min eigenvalue {lam_min:.3e})")


def _optimize(h: BipartiteOperator, maximize: bool, restarts: int, seed: Seed,
              iter_tol: float, max_iter: int) -> ProductOptimum:
    if restarts < 1:
        raise ValueError("need at least one restart")
    m, n = h.dims
    best: SeesawRun | None = None
    values = []
    for rng in _child_rngs(seed, restarts):
        a0, b0 = _random_start(m, n, rng)
        run = seesaw(h.mat, m, n, a0, b0, maximize, iter_tol, max_iter)
        values.append(run.value)
        # strict comparison keeps the lowest restart index on ties
        if best is None or (run.value > best.value if maximize else run.value < best.value):
            best = run
    pv = ProductVector.normalized(best.a, best.b)
    return ProductOptimum(pv.expectation(h.mat), pv, restarts, float(max(values) - min(values)))


def max_product_overlap(h: BipartiteOperator, restarts: int = DEFAULT_OPTIONS.restarts,
                        seed: Seed = DEFAULT_OPTIONS.seed, iter_tol: float = DEFAULT_OPTIONS.iter_tol,
                        max_iter: int = DEFAULT_OPTIONS.max_iter) -> ProductOptimum:
    """Largest <a,b|h|a,b> found over unit product vectors, for PSD h."""
    _check_psd(h)
    return _optimize(h, True, restarts, seed, iter_tol, max_iter)


def min_product_overlap(h: BipartiteOperator, restarts: int = DEFAULT_OPTIONS.restarts,
                        seed: Seed = DEFAULT_OPTIONS.seed, iter_tol: float = DEFAULT_OPTIONS.iter_tol,
                        max_iter: int = DEFAULT_OPTIONS.max_iter) -> ProductOptimum:
    """Smallest <a,b|h|a,b> found over unit product vectors, for PSD h."""
    _check_psd(h)
    return _optimize(h, False, restarts, seed, iter_tol, max_iter)


def _check_projector(p: BipartiteOperator) -> None:
    if float(np.max(np.abs(p.mat @ p.mat - p.mat))) > TOL.projector:
        raise NotProjectorError("operator is not a projector")


@dataclass(frozen=True)
class Found:
    vector: ProductVector
    value: float


@dataclass(frozen=True)
class NoneFoundNumerically:
    best_value: float


def polish_in_range(p: np.ndarray, m: int, n: int, a: np.ndarray, b: np.ndarray) -> tuple[ProductVector, float]:
    """Pull a near-product vector of range(p) onto an exact one.

    Least-squares on ||(I - p)(a (x) b)|| over the local vectors, with the
    unit norms imposed as penalty residuals.
    Where the seesaw crawls (degenerate maxima), this converges at least
    linearly. Returns the polished vector and its value <a,b|p|a,b>.
    """
    comp = np.eye(m * n) - p
    ea = np.eye(m)
    eb = np.eye(n)

    # unnormalized product plus norm penalties keeps the Jacobian closed-form
    def split(x):
        return x[:m] + 1j * x[m:2 * m], x[2 * m:2 * m + n] + 1j * x[2 * m + n:]

    def residual(x):
        aa, bb = split(x)
        z = comp @ np.outer(aa, bb).ravel()
        return np.concatenate([z.real, z.imag, [aa.real @ aa.real + aa.imag @ aa.imag - 1,
                                                bb.real @ bb.real + bb.imag @ bb.imag - 1]])

    def jacobian(x):
        aa, bb = split(x)
        da = comp @ (ea[:, None, :] * bb[None, :, None]).reshape(m * n, m)
        db = comp @ (aa[:, None, None] * eb[None, :, :]).reshape(m * n, n)
        jz = np.hstack([da, 1j * da, db, 1j * db])
        pen = np.zeros((2, x.size))
        pen[0, :2 * m] = 2 * x[:2 * m]
        pen[1, 2 * m:] = 2 * x[2 * m:]
        return np.vstack([jz.real, jz.imag, pen])

    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    x0 = np.concatenate([a.real, a.imag, b.real, b.imag])
    res = least_squares(residual, x0, jac=jacobian, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
    x = res.x
    pv = ProductVector.normalized(x[:m] + 1j * x[m:2 * m], x[2 * m:2 * m + n] + 1j * x[2 * m + n:])
    start = ProductVector.normalized(a, b)
    if pv.expectation(p) < start.expectation(p):
        pv = start
    return pv, pv.expectation(p)


def contains_product_vector(p: BipartiteOperator, restarts: int = DEFAULT_OPTIONS.restarts,
                            tol: float = DEFAULT_OPTIONS.product_tol,
                            seed: Seed = DEFAULT_OPTIONS.seed) -> Found | NoneFoundNumerically:
    _check_projector(p)
    if np.trace(p.mat).real < 0.5:
        return NoneFoundNumerically(0.0)
    opt = max_product_overlap(p, restarts, seed)
    if opt.value >= 1 - tol:
        pv, value = polish_in_range(p.mat, *p.dims, opt.vector.a, opt.vector.b)
        return Found(pv, value)
    return NoneFoundNumerically(opt.value)


@dataclass(frozen=True)
class Spanned:
    vectors: tuple[ProductVector, ...]


@dataclass(frozen=True)
class NotSpannedNumerically:
    found_rank: int
    needed_rank: int
    vectors: tuple[ProductVector, ...] = ()


def _collect_product_vectors(p: BipartiteOperator, restarts: int, tol: float,
                             seed: Seed) -> tuple[list[ProductVector], int]:
    """Gather linearly independent product vectors lying in range(p).

    Each attempt runs one seesaw on the deflated operator p - Pi (Pi the
    projector onto the span found so far); when that fails, the same start
    is rerun on p - Pi/2 and then on p, to catch product vectors of range(p)
    that are not orthogonal to the current span; promising points are polished. Stops at rank(p) vectors or after 3*restarts
    consecutive failures.
    """
    m, n = p.dims
    rank = int(round(np.trace(p.mat).real))
    found: list[ProductVector] = []
    span = np.zeros((m * n, 0), dtype=complex)
    failures = 0
    ss = np.random.SeedSequence(seed)
    while len(found) < rank and failures < 3 * restarts:
        rng = np.random.default_rng(ss.spawn(1)[0])
        a0, b0 = _random_start(m, n, rng)
        pi = projector_onto(span) if span.shape[1] else np.zeros_like(p.mat)
        deflated = p.mat - pi
        run = seesaw(deflated, m, n, a0, b0, True)
        candidate = None
        if run.value >= 1 - tol:
            pv, value = polish_in_range(deflated, m, n, run.a, run.b)
            if value >= 1 - tol:
                candidate = pv
        else:
            # penalize the found span so the rerun drifts toward new directions
            run = seesaw(p.mat - 0.5 * pi, m, n, a0, b0, True, max_iter=100)
            run = seesaw(p.mat, m, n, run.a, run.b, True, max_iter=100)
            x = np.outer(run.a, run.b).ravel()
            if run.value >= 1 - 1e-4 and np.linalg.norm(x - pi @ x) > 0.1:
                pv, value = polish_in_range(p.mat, m, n, run.a, run.b)
                x = pv.vector()
                # a degenerate maximum cannot resolve small drifts along
                # range(p), so demand a clearly new direction
                if value >= 1 - min(tol, 1e-12) and np.linalg.norm(x - pi @ x) > 1e-3:
                    candidate = pv
        if candidate is None:
            failures += 1
            continue
        failures = 0
        found.append(candidate)
        span = np.column_stack([span, candidate.vector()])
    return found, rank


def spanned_by_product_vectors(p: BipartiteOperator, restarts: int = DEFAULT_OPTIONS.restarts,
                               tol: float = DEFAULT_OPTIONS.product_tol,
                               seed: Seed = DEFAULT_OPTIONS.seed) -> Spanned | NotSpannedNumerically:
    _check_projector(p)
    found, rank = _collect_product_vectors(p, restarts, tol, seed)
    if len(found) >= rank:
        return Spanned(tuple(found))
    return NotSpannedNumerically(len(found), rank, tuple(found))


def split_product_part(p: BipartiteOperator, restarts: int = DEFAULT_OPTIONS.restarts,
                       tol: float = DEFAULT_OPTIONS.product_tol,
                       seed: Seed = DEFAULT_OPTIONS.seed) -> tuple[BipartiteOperator, BipartiteOperator]:
    """Split p = p11 + p12 with p11 the projector onto the product vectors found in range(p)."""
    _check_projector(p)
    found, _ = _collect_product_vectors(p, restarts, tol, seed)
    if found:
        p11 = projector_onto(np.column_stack([v.vector() for v in found]))
        # keep p11 inside range(p) despite seesaw rounding
        p11 = p.mat @ p11 @ p.mat
        p11 = projector_onto(_range(p11))
    else:
        p11 = np.zeros_like(p.mat)
    return p.like(p11), p.like(p.mat - p11)


def _range(x: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (x + x.conj().T))
    return v[:, w > 0.5]
