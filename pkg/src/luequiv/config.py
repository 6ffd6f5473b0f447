"""Shared numerical tolerances and run options."""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-12
    orthonormality: float = 1e-10
    reconstruction: float = 1e-10
    jacobi_offdiag: float = 1e-13
    psd: float = 1e-9
    projector: float = 1e-8


TOL = Tolerances()


@dataclass(frozen=True)
class Options:
    """Knobs shared by the optimizers, the decision pipeline and the CLI.

    ``restarts``/``iter_tol``/``max_iter`` drive the product-state seesaw,
    ``search_restarts``/``accept_tol`` drive the local-unitary search.
    """

    seed: int = 42
    restarts: int = 64
    iter_tol: float = 1e-12
    max_iter: int = 500
    product_tol: float = 1e-7
    group_tol: float = 1e-8
    search_restarts: int = 32
    accept_tol: float = 1e-7
    invariant_tol: float = 1e-7

    def with_(self, **changes) -> "Options":
        return replace(self, **changes)


DEFAULT_OPTIONS = Options()
