"""Construction of enhancement matrices B with certified overall convexity.

Given dense A (m-by-n) and a full-row-rank L (l-by-n), the key object is
the curvature budget

    S = A2^T A2 - A2^T A1 (A1^T A1)^+ A1^T A2,

the generalized Schur complement of A~^T A~ where [A1 A2] = A Lt^{-1} and
Lt is any nonsingular square completion of L (bottom l rows equal to L).
Quadratically, z^T S z = min { ||A x||^2 : L x = z }, so S is the largest
curvature the data term can spare along the range of L. Scaling its
eigendecomposition U diag(lam) U^T gives

    B = sqrt(theta / mu) * diag(sqrt(lam)) U^T,   theta in [0, 1],

for which A^T A - mu L^T B^T B L >= 0 holds by construction; theta = 0
recovers the plain convex penalty and theta = 1 spends the whole budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linops import DenseOperator

__all__ = ["BDesign", "MultiBDesign", "PenaltyBlock",
           "complete_to_square", "design_b", "design_b_multi"]

# relative cutoff used for rank checks and the pseudo-inverse
_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class BDesign:
    """One designed enhancement matrix and the pieces that produced it."""

    b: DenseOperator
    theta: float
    mu: float
    tilde_l: np.ndarray        # nonsingular completion, bottom rows equal L
    spectrum: np.ndarray       # eigenvalues of the curvature budget, ascending

    def btb(self) -> np.ndarray:
        m = self.b.to_dense()
        return m.T @ m


@dataclass(frozen=True)
class PenaltyBlock:
    """One (L_i, mu_i, theta_i) penalty term of a multi-penalty model."""

    l: np.ndarray
    mu: float
    theta: float
    tilde_l: np.ndarray | None = None


@dataclass(frozen=True)
class MultiBDesign:
    """Block-diagonal enhancement for a separable multi-penalty model.

    Block i of the assembled matrix is sqrt(mu_i) * B_i where B_i is the
    per-term design; with the penalty weights mu_i carried by the
    separable penalty itself, the assembled pair certifies the joint model.
    """

    b: DenseOperator
    blocks: tuple[BDesign, ...]
    weights: tuple[float, ...]


def _check_full_row_rank(l_mat: np.ndarray) -> None:
    s = np.linalg.svd(l_mat, compute_uv=False)
    if s.size == 0 or s[-1] <= _RANK_RTOL * s[0]:
        raise ValueError("L must have full row rank")


def complete_to_square(l_mat) -> np.ndarray:
    """Nonsingular n-by-n completion of a full-row-rank l-by-n matrix.

    The bottom l rows are L itself; the top n-l rows are an orthonormal
    basis of null(L) obtained from the SVD, so the result is always
    nonsingular. Callers may instead supply an explicit completion to
    :func:`design_b` (e.g. the unit-vector completion of a difference
    operator) when a particular one is wanted.
    """
    l_mat = np.asarray(l_mat, dtype=float)
    l_rows, n = l_mat.shape
    if l_rows > n:
        raise ValueError("L cannot have more rows than columns")
    _check_full_row_rank(l_mat)
    if l_rows == n:
        return np.array(l_mat)
    _, _, vt = np.linalg.svd(l_mat, full_matrices=True)
    return np.vstack([vt[l_rows:, :], l_mat])


def _validate_completion(tilde_l, l_mat) -> np.ndarray:
    tilde_l = np.asarray(tilde_l, dtype=float)
    l_rows, n = l_mat.shape
    if tilde_l.shape != (n, n):
        raise ValueError(f"completion must be {n}x{n}, got {tilde_l.shape}")
    if not np.allclose(tilde_l[n - l_rows:, :], l_mat, rtol=0.0, atol=1e-12):
        raise ValueError("completion must agree with L on its bottom rows")
    s = np.linalg.svd(tilde_l, compute_uv=False)
    if s[-1] <= _RANK_RTOL * s[0]:
        raise ValueError("completion matrix is singular")
    return tilde_l


def design_b(a_mat, l_mat, mu: float, theta: float,
             tilde_l=None) -> BDesign:
    """Design B so that the model with penalty weight mu stays convex.

    theta in [0, 1] sets the enhancement strength: 0 gives B = 0, 1 spends
    the full curvature budget. ``tilde_l`` optionally overrides the
    null-space completion of L.
    """
    a_mat = np.asarray(a_mat, dtype=float)
    l_mat = np.asarray(l_mat, dtype=float)
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    if mu <= 0:
        raise ValueError("mu must be positive")
    if a_mat.shape[1] != l_mat.shape[1]:
        raise ValueError("A and L must share the column dimension")
    l_rows, n = l_mat.shape
    _check_full_row_rank(l_mat)
    if tilde_l is None:
        tilde_l = complete_to_square(l_mat)
    else:
        tilde_l = _validate_completion(tilde_l, l_mat)

    # A in completed coordinates: [A1 A2] = A inv(Lt)
    a_til = np.linalg.solve(tilde_l.T, a_mat.T).T
    a1 = a_til[:, : n - l_rows]
    a2 = a_til[:, n - l_rows:]
    raw = a2.T @ a2
    s = raw
    if a1.shape[1] > 0:
        g = a1.T @ a1
        cross = a1.T @ a2
        s = raw - cross.T @ np.linalg.pinv(g, rcond=_RANK_RTOL, hermitian=True) @ cross
    s = 0.5 * (s + s.T)
    lam, u = np.linalg.eigh(s)
    # The budget is PSD in exact arithmetic but comes out of a cancellation
    # of raw-Gram-sized quantities (it can be exactly zero, e.g. with fewer
    # measurements than completion directions), so round-off negatives must
    # be judged on the raw scale.
    if lam.size and lam[0] < 0.0:
        scale = max(1.0, float(np.linalg.eigvalsh(raw)[-1]))
        if lam[0] < -1e-10 * scale:
            raise ValueError(
                f"curvature budget has eigenvalue {lam[0]:.3e} below "
                f"-{1e-10 * scale:.1e}; the completion or the rank decision "
                "is inconsistent"
            )
    lam_pos = np.maximum(lam, 0.0)
    b_mat = np.sqrt(theta / mu) * (np.sqrt(lam_pos)[:, None] * u.T)
    return BDesign(b=DenseOperator(b_mat), theta=float(theta), mu=float(mu),
                   tilde_l=tilde_l, spectrum=lam)


def design_b_multi(a_mat, blocks, mu: float, weights) -> MultiBDesign:
    """Block-diagonal design for a sum of weighted penalties.

    ``blocks`` is a sequence of :class:`PenaltyBlock`; ``weights`` are the
    convex-split coefficients (positive, summing to one) that apportion
    the data term between the blocks. Block i is designed for the scaled
    pair (sqrt(w_i / mu) A, L_i) at strength theta_i, and the assembled
    matrix carries the extra sqrt(mu_i) block scaling.
    """
    weights = tuple(float(w) for w in weights)
    blocks = tuple(blocks)
    if len(weights) != len(blocks):
        raise ValueError("need one weight per block")
    if any(w <= 0 for w in weights):
        raise ValueError("weights must be strictly positive")
    if abs(sum(weights) - 1.0) > 1e-12:
        raise ValueError("weights must sum to one")
    if mu <= 0:
        raise ValueError("mu must be positive")
    a_mat = np.asarray(a_mat, dtype=float)

    designs = []
    for w, blk in zip(weights, blocks):
        designs.append(
            design_b(np.sqrt(w / mu) * a_mat, blk.l, blk.mu, blk.theta, blk.tilde_l)
        )
    sizes = [d.b.rows for d in designs]
    total = sum(sizes)
    assembled = np.zeros((total, total))
    lo = 0
    for d, blk, size in zip(designs, blocks, sizes):
        assembled[lo:lo + size, lo:lo + size] = np.sqrt(blk.mu) * d.b.to_dense()
        lo += size
    return MultiBDesign(b=DenseOperator(assembled), blocks=tuple(designs),
                        weights=weights)
