"""Named operators built from exact constants, plus their planted unitaries."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .linalg import BipartiteOperator, LocalUnitary
from .witness import tiles_upb, upb_state

S2 = 1 / math.sqrt(2)


def ket(*amps) -> np.ndarray:
    return np.asarray(amps, dtype=complex)


def basis(d: int, i: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[i] = 1
    return e


def proj(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


PHI_PLUS = ket(S2, 0, 0, S2)
PHI_MINUS = ket(S2, 0, 0, -S2)
PSI_PLUS = ket(0, S2, S2, 0)
PSI_MINUS = ket(0, S2, -S2, 0)
KET00, KET01, KET10, KET11 = (basis(4, i) for i in range(4))
PLUS_PLUS = ket(0.5, 0.5, 0.5, 0.5)


def rho1() -> BipartiteOperator:
    """NPT state with spectrum {0.6, 0.2, 0.1, 0.1} on the Bell-type eigenbasis."""
    m = (proj(KET01) + proj(KET10) + 2 * proj(PHI_PLUS) + 6 * proj(PHI_MINUS)) / 10
    return BipartiteOperator(2, 2, m)


def rho3prime() -> BipartiteOperator:
    """Rank-three separable two-qubit state orthogonal to the singlet."""
    m = (proj(KET00) + proj(KET11) + 4 * proj(PLUS_PLUS)) / 6
    return BipartiteOperator(2, 2, m)


def rho3(eps: float = 0.01) -> BipartiteOperator:
    """rho3prime + eps I, renormalized; the singlet line is an eigenspace."""
    m = rho3prime().mat + eps * np.eye(4)
    return BipartiteOperator(2, 2, m / np.trace(m).real)


def crlu_rho() -> BipartiteOperator:
    m = proj(KET00) / 2 + proj(KET01) / 4 + (proj(KET10) + proj(KET11)) / 8
    return BipartiteOperator(2, 2, m)


def crlu_sigma() -> BipartiteOperator:
    m = proj(PHI_PLUS) / 2 + proj(PHI_MINUS) / 4 + (proj(KET01) + proj(KET10)) / 8
    return BipartiteOperator(2, 2, m)


def tiles_state() -> BipartiteOperator:
    return upb_state(tiles_upb())


def tiles_noisy(eps: float = 0.01) -> BipartiteOperator:
    m = tiles_state().mat + eps * np.eye(9)
    return BipartiteOperator(3, 3, m / np.trace(m).real)


# 3x4 projector family: local rank-one on A, 0/1 diagonal on B
CEX_B_DIAGONALS = {
    "P1": (0, (1, 1, 0, 0)),
    "P2": (1, (1, 0, 1, 0)),
    "P3": (2, (1, 0, 0, 1)),
    "Q1": (0, (1, 1, 0, 0)),
    "Q2": (1, (1, 0, 1, 0)),
    "Q3": (2, (0, 1, 1, 0)),
}


def cex(name: str) -> BipartiteOperator:
    a, diag_b = CEX_B_DIAGONALS[name]
    return BipartiteOperator(3, 4, np.kron(proj(basis(3, a)), np.diag(np.asarray(diag_b, dtype=complex))))


def cex_lu_13() -> LocalUnitary:
    """I (x) (X + X): maps (Q1, Q3) onto (P1, P3)."""
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    v = np.zeros((4, 4), dtype=complex)
    v[:2, :2] = x
    v[2:, 2:] = x
    return LocalUnitary(np.eye(3, dtype=complex), v)


def cex_lu_23() -> LocalUnitary:
    """I (x) (block swap of the two halves): maps (Q2, Q3) onto (P2, P3)."""
    v = np.zeros((4, 4), dtype=complex)
    v[0, 2] = v[1, 3] = v[2, 0] = v[3, 1] = 1
    return LocalUnitary(np.eye(3, dtype=complex), v)


def alpha_psi(theta: float = math.pi / 6) -> np.ndarray:
    return ket(math.cos(theta), 0, 0, math.sin(theta))


def alpha(which: int, x: float = 1.0, y: float = 2.0, theta: float = math.pi / 6) -> BipartiteOperator:
    """alpha_i = x |psi><psi| + y |Psi+-><Psi+-|, psi = cos t |00> + sin t |11>."""
    b = PSI_PLUS if which == 1 else PSI_MINUS
    return BipartiteOperator(2, 2, x * proj(alpha_psi(theta)) + y * proj(b))


def alpha_lu() -> LocalUnitary:
    """diag(i, 1) (x) diag(-i, 1): fixes psi and sends Psi- to Psi+ (maps alpha2 to alpha1)."""
    return LocalUnitary(np.diag([1j, 1]), np.diag([-1j, 1]))


FIXTURES: dict[str, Callable[[], BipartiteOperator]] = {
    "paper.rho1": rho1,
    "paper.rho3prime": rho3prime,
    "paper.crlu.rho": crlu_rho,
    "paper.crlu.sigma": crlu_sigma,
    "paper.tiles_upb_state": tiles_state,
    "paper.alpha1": lambda: alpha(1),
    "paper.alpha2": lambda: alpha(2),
    **{f"paper.cex.{k}": (lambda k=k: cex(k)) for k in CEX_B_DIAGONALS},
    "std.rho3": rho3,
    "std.tiles_noisy": tiles_noisy,
    "std.phi_plus": lambda: BipartiteOperator(2, 2, proj(PHI_PLUS)),
    "std.product00": lambda: BipartiteOperator(2, 2, proj(KET00)),
    "std.maximally_mixed": lambda: BipartiteOperator(2, 2, np.eye(4) / 4),
    "std.singlet": lambda: BipartiteOperator(2, 2, proj(PSI_MINUS)),
}


def get_fixture(name: str) -> BipartiteOperator:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(sorted(FIXTURES))}") from None
