"""Enhanced penalties, the full objective, and the convexity certificate.

The enhanced (generalized-Moreau) penalty of a convex penalty ``psi`` with
matrix parameter B is

    psi_B(z) = psi(z) - min_v [ psi(v) + 0.5 * ||B (z - v)||^2 ],

which is nonconvex for B != 0, yet the least-squares objective

    J(x) = 0.5 * ||y - A x||^2 + mu * psi_B(L x)

remains convex whenever A^T A - mu L^T B^T B L >= 0. This module evaluates
psi_B and J numerically and certifies that eigenvalue condition.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .linops import LinearOperator, op_norm
from .penalties import Penalty

__all__ = [
    "InnerSolveConfig",
    "Problem",
    "ConvexityCertificate",
    "gme_value",
    "objective",
    "certify_convexity",
    "check_l1_linear_region",
]


@dataclass(frozen=True)
class InnerSolveConfig:
    """Forward-backward settings for the inner minimization in the penalty."""

    tol: float = 1e-10          # on the gradient-mapping norm
    max_iter: int = 100_000

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("inner tolerance must be positive")


@dataclass(frozen=True)
class Problem:
    """The data (A, y, L, B, mu, penalty) of one regularized model."""

    a: LinearOperator
    y: np.ndarray
    l: LinearOperator
    b: LinearOperator
    mu: float
    penalty: Penalty

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        if self.a.cols != self.l.cols:
            raise ValueError("A and L must share the domain dimension")
        if self.y.shape != (self.a.rows,):
            raise ValueError("y must live in the range of A")
        if self.l.rows != self.b.cols:
            raise ValueError("B must act on the range of L")
        if self.penalty.total_len != self.l.rows:
            raise ValueError("penalty length must match the range of L")
        if not self.mu > 0:
            raise ValueError("mu must be positive")


@dataclass(frozen=True)
class ConvexityCertificate:
    """Smallest eigenvalue of sym(A^T A - mu L^T B^T B L) and its verdict."""

    min_eig: float
    holds: bool
    tolerance: float


def _btb_matvec(b: LinearOperator, dense_cap: int = 2048):
    """A fast v -> B^T B v, materialized densely at desk scale."""
    if b.cols <= dense_cap:
        bd = b.to_dense()
        btb = bd.T @ bd
        return lambda v: btb @ v
    return lambda v: b.adjoint_apply(b.apply(v))


def gme_value(penalty: Penalty, b: LinearOperator, z,
              inner: InnerSolveConfig | None = None) -> float:
    """Value of the enhanced penalty psi_B at z.

    The inner minimum over v is computed by forward-backward iteration on
    the smooth part 0.5*||B(z - v)||^2 (step 1/||B||_op^2, prox step on
    psi, warm start v = z) until the gradient-mapping norm falls below
    ``inner.tol``. Non-convergence raises a RuntimeWarning rather than
    failing silently. For B = 0 the value is psi(z) exactly.
    """
    inner = inner or InnerSolveConfig()
    z = np.asarray(z, dtype=float)
    lip = op_norm(b) ** 2
    if lip == 0.0:
        return penalty.value(z)
    step = 1.0 / lip
    btb = _btb_matvec(b)
    v = z.copy()
    converged = False
    for _ in range(inner.max_iter):
        v_next = penalty.prox(v - step * btb(v - z), step)
        residual = float(np.linalg.norm(v - v_next)) / step
        v = v_next
        if residual <= inner.tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"gme_value: inner solve stopped at max_iter={inner.max_iter} "
            f"with gradient-mapping residual above tol={inner.tol:g}",
            RuntimeWarning,
        )
    inner_min = penalty.value(v) + 0.5 * float(np.sum(b.apply(z - v) ** 2))
    return penalty.value(z) - inner_min


def objective(problem: Problem, x, inner: InnerSolveConfig | None = None) -> float:
    """J(x) = 0.5 ||y - A x||^2 + mu * psi_B(L x)."""
    x = np.asarray(x, dtype=float)
    r = problem.y - problem.a.apply(x)
    return 0.5 * float(np.sum(r ** 2)) + problem.mu * gme_value(
        problem.penalty, problem.b, problem.l.apply(x), inner
    )


def certify_convexity(problem: Problem, tol: float = 1e-8,
                      dense_cap: int = 4096) -> ConvexityCertificate:
    """Eigenvalue certificate for convexity of the full objective.

    Materializes M = A^T A - mu L^T B^T B L, symmetrizes it to suppress
    round-off asymmetry, and reports its smallest eigenvalue; the
    certificate holds when min_eig >= -tol.
    """
    n = problem.a.cols
    if n > dense_cap:
        raise ValueError(
            f"certify_convexity materializes an {n}x{n} matrix, above the cap "
            f"{dense_cap}; use a randomized probe instead at this scale"
        )
    ad = problem.a.to_dense()
    ld = problem.l.to_dense()
    bd = problem.b.to_dense()
    bl = bd @ ld
    m = ad.T @ ad - problem.mu * (bl.T @ bl)
    m = 0.5 * (m + m.T)
    min_eig = float(np.linalg.eigvalsh(m)[0])
    return ConvexityCertificate(min_eig=min_eig, holds=min_eig >= -tol, tolerance=tol)


def check_l1_linear_region(b: LinearOperator, l: LinearOperator, x) -> bool:
    """Whether the enhanced l1 penalty is in its closed-form region at x.

    For psi = l1 the identity psi_B(Lx) = ||Lx||_1 - 0.5*||B L x||^2 holds
    exactly when ||B^T B L x||_inf <= 1 (the dual-norm condition).
    """
    x = np.asarray(x, dtype=float)
    lx = l.apply(x)
    return float(np.max(np.abs(b.adjoint_apply(b.apply(lx))))) <= 1.0 + 1e-12
