"""Dense complex linear algebra for small bipartite systems.

Everything here works on plain ``numpy`` complex arrays. ``BipartiteOperator``
tags a Hermitian ``mn x mn`` matrix with its local dimensions and is the
input type of every higher-level routine.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .config import TOL


class NotHermitianError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def hermiticity_defect(h: np.ndarray) -> float:
    h = np.asarray(h)
    if h.size == 0:
        return 0.0
    return float(np.max(np.abs(h - h.conj().T)))


def is_hermitian(h: np.ndarray, tol: float = TOL.hermiticity) -> bool:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    scale = 1.0 + (float(np.max(np.abs(h))) if h.size else 0.0)
    return hermiticity_defect(h) <= tol * scale


def _require_hermitian(h: np.ndarray, what: str = "matrix", tol: float = TOL.hermiticity) -> None:
    if not is_hermitian(h, tol):
        raise NotHermitianError(f"{what} is not Hermitian")


@dataclass(frozen=True, eq=False)
class BipartiteOperator:
    """Hermitian operator on C^m (x) C^n."""

    dim_a: int
    dim_b: int
    mat: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.mat)
        d = self.dim_a * self.dim_b
        if self.dim_a < 1 or self.dim_b < 1:
            raise ValueError("local dimensions must be positive")
        if mat.shape != (d, d):
            raise DimensionMismatchError(
                f"matrix shape {mat.shape} does not match dims {self.dim_a}x{self.dim_b}"
            )
        _require_hermitian(mat, "operator")
        object.__setattr__(self, "mat", mat)

    @property
    def dims(self) -> tuple[int, int]:
        return (self.dim_a, self.dim_b)

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_b

    @classmethod
    def from_vector(cls, psi, dim_a: int, dim_b: int) -> "BipartiteOperator":
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        return cls(dim_a, dim_b, np.outer(psi, psi.conj()))

    @classmethod
    def identity(cls, dim_a: int, dim_b: int) -> "BipartiteOperator":
        return cls(dim_a, dim_b, np.eye(dim_a * dim_b))

    def like(self, mat: np.ndarray) -> "BipartiteOperator":
        return BipartiteOperator(self.dim_a, self.dim_b, mat)

    def shifted(self, x: float) -> "BipartiteOperator":
        return self.like(self.mat + x * np.eye(self.dim))

    def scaled(self, c: float) -> "BipartiteOperator":
        return self.like(c * self.mat)

    def conjugated(self, lu: "LocalUnitary") -> "BipartiteOperator":
        """Return (U (x) V) X (U (x) V)^dagger."""
        if (lu.u.shape[0], lu.v.shape[0]) != self.dims:
            raise DimensionMismatchError("local unitary does not match operator dims")
        w = lu.matrix()
        return self.like(w @ self.mat @ w.conj().T)

    def trace(self) -> float:
        return float(np.trace(self.mat).real)

    def allclose(self, other: "BipartiteOperator", atol: float = 1e-9) -> bool:
        return self.dims == other.dims and np.allclose(self.mat, other.mat, atol=atol, rtol=0)

    def __add__(self, other: "BipartiteOperator") -> "BipartiteOperator":
        if self.dims != other.dims:
            raise DimensionMismatchError("dims differ")
        return self.like(self.mat + other.mat)

    def __sub__(self, other: "BipartiteOperator") -> "BipartiteOperator":
        if self.dims != other.dims:
            raise DimensionMismatchError("dims differ")
        return self.like(self.mat - other.mat)

    def to_dict(self) -> dict:
        return {
            "dim_a": self.dim_a,
            "dim_b": self.dim_b,
            "matrix": matrix_to_pairs(self.mat),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BipartiteOperator":
        try:
            return cls(int(d["dim_a"]), int(d["dim_b"]), matrix_from_pairs(d["matrix"]))
        except KeyError as exc:
            raise ValueError(f"operator JSON is missing field {exc}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "BipartiteOperator":
        return cls.from_dict(json.loads(text))


def matrix_to_pairs(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_pairs(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError("matrix must be a list of rows of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _is_unitary(u: np.ndarray, tol: float) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))) <= tol


@dataclass(frozen=True, eq=False)
class LocalUnitary:
    """The product unitary U (x) V."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u, v = _frozen(self.u), _frozen(self.v)
        if not (_is_unitary(u, TOL.orthonormality) and _is_unitary(v, TOL.orthonormality)):
            raise ValueError("local factors must be unitary")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def identity(cls, dim_a: int, dim_b: int) -> "LocalUnitary":
        return cls(np.eye(dim_a), np.eye(dim_b))

    def matrix(self) -> np.ndarray:
        return np.kron(self.u, self.v)

    def __matmul__(self, other: "LocalUnitary") -> "LocalUnitary":
        return LocalUnitary(self.u @ other.u, self.v @ other.v)

    def dagger(self) -> "LocalUnitary":
        return LocalUnitary(self.u.conj().T, self.v.conj().T)

    def equals_up_to_phase(self, other: "LocalUnitary", tol: float = 1e-8) -> bool:
        return same_up_to_phase(self.u, other.u, tol) and same_up_to_phase(self.v, other.v, tol)

    def to_dict(self) -> dict:
        return {"u": matrix_to_pairs(self.u), "v": matrix_to_pairs(self.v)}


def same_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-8) -> bool:
    """True when a = e^{it} b for unitaries a, b of equal size."""
    if a.shape != b.shape:
        return False
    d = a.shape[0]
    w = b.conj().T @ a
    t = np.trace(w) / d
    if abs(abs(t) - 1.0) > tol:
        return False
    return float(np.max(np.abs(w - t * np.eye(d)))) <= tol


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_transpose(x: BipartiteOperator) -> BipartiteOperator:
    """Transpose on the B factor."""
    m, n = x.dims
    t = x.mat.reshape(m, n, m, n).transpose(0, 3, 2, 1).reshape(m * n, m * n)
    return x.like(t)


def partial_trace(x: BipartiteOperator, which: Literal["A", "B"]) -> np.ndarray:
    """Trace out the named factor."""
    m, n = x.dims
    t = x.mat.reshape(m, n, m, n)
    if which == "B":
        return np.einsum("ijkj->ik", t)
    if which == "A":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"which must be 'A' or 'B', got {which!r}")


_MAX_SWEEPS = 100


@functools.lru_cache(maxsize=None)
def _round_robin(n: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """Cyclic ordering of all index pairs into rounds of disjoint pairs."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    k = len(players)
    rounds = []
    for _ in range(k - 1):
        pairs = [(players[i], players[k - 1 - i]) for i in range(k // 2)]
        pairs = sorted((min(a, b), max(a, b)) for a, b in pairs if a >= 0 and b >= 0)
        if pairs:
            rounds.append(tuple(pairs))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def hermitian_eig(h, tol: float = TOL.jacobi_offdiag, vectors: bool = True) -> tuple[np.ndarray, np.ndarray | None]:
    """Eigen-decompose a Hermitian matrix by cyclic complex Jacobi rotations.

    Returns ascending real eigenvalues and the matching orthonormal
    eigenvectors as columns (None when ``vectors`` is false). Sweeps stop once the off-diagonal Frobenius
    mass falls below ``tol * max(1, ||h||_F)``.
    """
    a = np.array(h, dtype=complex, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotHermitianError("matrix must be square")
    _require_hermitian(a)
    n = a.shape[0]
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(a)))
    threshold = tol * scale

    offmask = ~np.eye(n, dtype=bool)
    rounds = _round_robin(n)
    ident = np.eye(n, dtype=complex)
    for _ in range(_MAX_SWEEPS):
        off = math.sqrt(float(np.sum(np.abs(a[offmask]) ** 2)))
        if off < threshold:
            break
        for pairs in rounds:
            # disjoint pairs: G = diag(1, ph) @ [[c, s], [-s, c]] on each (p, q)
            g = ident.copy()
            for p, q in pairs:
                apq = complex(a[p, q])
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                ph = (apq / mag).conjugate()
                g[p, p] = c
                g[p, q] = sn
                g[q, p] = -sn * ph
                g[q, q] = c * ph
            a = g.conj().T @ a @ g
            for p, q in pairs:
                a[p, q] = a[q, p] = 0.0
            if vectors:
                v = v @ g
        a[np.diag_indices(n)] = a.diagonal().real
    else:
        raise RuntimeError("Jacobi iteration did not converge")

    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return w[order], (v[:, order] if vectors else None)


def eigvalsh(h) -> np.ndarray:
    return hermitian_eig(h, vectors=False)[0]


def weyl_violation(a, b) -> float:
    """Largest violation of lam_i(A) + lam_min(B) <= lam_i(A+B) <= lam_i(A) + lam_max(B).

    Eigenvalues ascending; 0 (or a negative slack) when both bounds hold.
    """
    la, lb, lab = eigvalsh(a), eigvalsh(b), eigvalsh(np.asarray(a) + np.asarray(b))
    lower = la + lb[0] - lab
    upper = lab - (la + lb[-1])
    return float(max(lower.max(), upper.max()))


def unitary_from_generator(g) -> np.ndarray:
    """exp(i g) for Hermitian g."""
    w, v = hermitian_eig(g)
    return (v * np.exp(1j * w)) @ v.conj().T


def _expi_fast(g: np.ndarray) -> np.ndarray:
    # LAPACK route for optimizer inner loops
    w, v = np.linalg.eigh(g)
    return (v * np.exp(1j * w)) @ v.conj().T


def projector_onto(vectors: np.ndarray, rank_tol: float = 1e-8) -> np.ndarray:
    """Orthogonal projector onto the column span of ``vectors``."""
    vectors = np.asarray(vectors, dtype=complex)
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    if vectors.shape[1] == 0:
        return np.zeros((vectors.shape[0], vectors.shape[0]), dtype=complex)
    q = orthonormal_basis(vectors, rank_tol)
    return q @ q.conj().T


def orthonormal_basis(vectors: np.ndarray, rank_tol: float = 1e-8) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=complex)
    if vectors.shape[1] == 0:
        return vectors
    u, s, _ = np.linalg.svd(vectors, full_matrices=False)
    scale = max(1.0, float(s[0])) if s.size else 1.0
    return u[:, s > rank_tol * scale]


def range_basis(p: np.ndarray, rank_tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis of the range of a positive semidefinite matrix."""
    w, v = hermitian_eig(p)
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    return v[:, w > rank_tol * scale]


def numerical_rank(p: np.ndarray, rank_tol: float = 1e-8) -> int:
    return int(range_basis(p, rank_tol).shape[1])


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_local_unitary(dim_a: int, dim_b: int, rng: np.random.Generator) -> LocalUnitary:
    return LocalUnitary(haar_unitary(dim_a, rng), haar_unitary(dim_b, rng))


def random_unit_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)


def random_density_matrix(dim_a: int, dim_b: int, rng: np.random.Generator, rank: int | None = None) -> BipartiteOperator:
    d = dim_a * dim_b
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return BipartiteOperator(dim_a, dim_b, rho)


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (z + z.conj().T)
