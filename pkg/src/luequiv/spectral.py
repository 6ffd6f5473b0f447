"""Spectral decompositions into distinct-eigenvalue projectors, and Schmidt forms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import BipartiteOperator, DimensionMismatchError, hermitian_eig


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """H = sum_j eigenvalues[j] * projectors[j], eigenvalues strictly descending.

    The kernel is kept as an ordinary zero-eigenvalue projector, so the
    projectors always resolve the identity.
    """

    eigenvalues: tuple[float, ...]
    projectors: tuple[BipartiteOperator, ...]
    multiplicities: tuple[int, ...]
    bases: tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        return sum(lam * p.mat for lam, p in zip(self.eigenvalues, self.projectors))

    def index_of(self, value: float, tol: float = 1e-8) -> int:
        for j, lam in enumerate(self.eigenvalues):
            if abs(lam - value) <= tol * (1 + abs(value)):
                return j
        raise KeyError(f"no eigenvalue {value}")


def spectral_decompose(h: BipartiteOperator, group_tol: float = 1e-8) -> SpectralDecomposition:
    w, v = hermitian_eig(h.mat)
    w, v = w[::-1], v[:, ::-1]
    radius = float(np.max(np.abs(w))) if w.size else 0.0
    gap = group_tol * (1.0 + radius)

    # single-linkage clustering on the sorted list
    clusters: list[list[int]] = [[0]]
    for i in range(1, len(w)):
        if w[clusters[-1][-1]] - w[i] <= gap:
            clusters[-1].append(i)
        else:
            clusters.append([i])

    eigenvalues, projectors, mults, bases = [], [], [], []
    for idx in clusters:
        block = v[:, idx]
        p = block @ block.conj().T
        eigenvalues.append(float(np.mean(w[idx])))
        projectors.append(h.like(0.5 * (p + p.conj().T)))
        mults.append(len(idx))
        bases.append(block)
    return SpectralDecomposition(tuple(eigenvalues), tuple(projectors), tuple(mults), tuple(bases))


@dataclass(frozen=True)
class MatchReport:
    matches: bool
    index: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.matches


def spectra_match(h: BipartiteOperator, k: BipartiteOperator, tol: float = 1e-8,
                  group_tol: float = 1e-8) -> MatchReport:
    """Compare distinct eigenvalues and multiplicities of two operators.

    A failed report is an LU-inequivalence certificate: it names the first
    eigenvalue (in descending order) that differs in value or multiplicity.
    """
    if h.dims != k.dims:
        raise DimensionMismatchError(f"dims {h.dims} vs {k.dims}")
    sh = spectral_decompose(h, group_tol)
    sk = spectral_decompose(k, group_tol)
    for j, (a, b) in enumerate(zip(sh.eigenvalues, sk.eigenvalues)):
        if abs(a - b) > tol * (1 + max(abs(a), abs(b))):
            return MatchReport(False, j, f"eigenvalue {a!r} vs {b!r}")
        if sh.multiplicities[j] != sk.multiplicities[j]:
            return MatchReport(
                False, j, f"multiplicity {sh.multiplicities[j]} vs {sk.multiplicities[j]} at eigenvalue {a!r}"
            )
    if len(sh) != len(sk):
        j = min(len(sh), len(sk))
        return MatchReport(False, j, f"{len(sh)} vs {len(sk)} distinct eigenvalues")
    return MatchReport(True)


@dataclass(frozen=True, eq=False)
class SchmidtForm:
    """psi = sum_i coefficients[i] * basis_a[:, i] (x) basis_b[:, i]."""

    coefficients: tuple[float, ...]
    basis_a: np.ndarray
    basis_b: np.ndarray

    @property
    def dims(self) -> tuple[int, int]:
        return (self.basis_a.shape[0], self.basis_b.shape[0])

    @property
    def rank(self) -> int:
        return len(self.coefficients)

    def vector(self) -> np.ndarray:
        m, n = self.dims
        psi = np.zeros(m * n, dtype=complex)
        for c, a, b in zip(self.coefficients, self.basis_a.T, self.basis_b.T):
            psi += c * np.kron(a, b)
        return psi


def schmidt_decompose(psi, m: int, n: int, tol: float = 1e-12) -> SchmidtForm:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.shape[0] != m * n:
        raise DimensionMismatchError(f"vector of length {psi.shape[0]} is not {m}x{n}")
    norm = float(np.linalg.norm(psi))
    if norm == 0.0:
        raise ValueError("zero vector has no Schmidt decomposition")
    u, s, vh = np.linalg.svd(psi.reshape(m, n), full_matrices=False)
    keep = s > tol * norm
    return SchmidtForm(
        tuple(float(x) for x in s[keep]),
        u[:, keep],
        vh.T[:, keep],
    )


def schmidt_coefficients_of_projector(p: BipartiteOperator) -> tuple[float, ...]:
    """Schmidt coefficients of the unit vector spanning a rank-one projector."""
    w, v = hermitian_eig(p.mat)
    return schmidt_decompose(v[:, -1], *p.dims).coefficients


def pure_pt_spectrum(s: SchmidtForm) -> list[float]:
    """Closed-form partial-transpose spectrum of a pure state, ascending.

    c_i^2 for each Schmidt coefficient and +-c_i c_j for each pair i<j,
    padded with zeros up to the full dimension.
    """
    c = list(s.coefficients)
    vals = [x * x for x in c]
    for i in range(len(c)):
        for j in range(i + 1, len(c)):
            vals += [c[i] * c[j], -c[i] * c[j]]
    m, n = s.dims
    vals += [0.0] * (m * n - len(vals))
    return sorted(vals)


def schmidt_rank(psi, m: int, n: int, tol: float = 1e-9) -> int:
    return sum(1 for c in schmidt_decompose(psi, m, n).coefficients if c > tol)


def pure_states_lu_equivalent(psi, phi, m: int, n: int, tol: float = 1e-9) -> bool:
    a = schmidt_decompose(psi, m, n).coefficients
    b = schmidt_decompose(phi, m, n).coefficients
    a = [x for x in a if x > tol]
    b = [x for x in b if x > tol]
    return len(a) == len(b) and all(math.isclose(x, y, abs_tol=tol) for x, y in zip(a, b))
