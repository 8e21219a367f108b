"""Proximable penalties: value, prox, conjugate prox, Moreau envelope.

Supported penalties are the l1 norm, the nuclear norm of a matricized
vector, and positively weighted separable sums of these on a product
space. All are even-symmetric, coercive, finite everywhere, and zero at
the origin, which is what the enhanced-penalty machinery in
:mod:`ligme.model` assumes.

Matricized vectors use the column-major convention of :mod:`ligme.linops`.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Penalty", "L1Norm", "NuclearNorm", "SeparableSum", "soft_threshold"]


def soft_threshold(z: np.ndarray, t: float) -> np.ndarray:
    """Componentwise shrinkage toward zero by t >= 0."""
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


class Penalty:
    """Base class for proximable convex penalties on R^total_len."""

    total_len: int

    def value(self, z) -> float:
        raise NotImplementedError

    def prox(self, z, gamma: float) -> np.ndarray:
        """argmin_y [gamma * penalty(y) + 0.5 * ||z - y||^2]."""
        raise NotImplementedError

    def _check(self, z, gamma: float | None = None) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.total_len,):
            raise ValueError(
                f"expected a vector of shape ({self.total_len},), got {z.shape}"
            )
        if gamma is not None and gamma <= 0:
            raise ValueError("gamma must be positive")
        return z

    def prox_conjugate(self, z) -> np.ndarray:
        """Prox of the convex conjugate, via Moreau decomposition z - prox(z, 1)."""
        z = self._check(z)
        return z - self.prox(z, 1.0)

    def moreau_envelope(self, z, gamma: float) -> float:
        p = self.prox(z, gamma)
        z = self._check(z, gamma)
        return self.value(p) + float(np.sum((z - p) ** 2)) / (2.0 * gamma)

    def moreau_gradient(self, z, gamma: float) -> np.ndarray:
        z = self._check(z, gamma)
        return (z - self.prox(z, gamma)) / gamma


class L1Norm(Penalty):
    """Sum of absolute values; prox is soft-thresholding."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("l1 penalty needs n >= 1")
        self.total_len = int(n)

    def value(self, z) -> float:
        return float(np.sum(np.abs(self._check(z))))

    def prox(self, z, gamma: float) -> np.ndarray:
        z = self._check(z, gamma)
        return soft_threshold(z, gamma)


class NuclearNorm(Penalty):
    """Sum of singular values of the matricized vector.

    Acts on vectors of length rows*cols interpreted as rows-by-cols
    matrices in column-major order; the prox soft-thresholds the singular
    values and reassembles the matrix.
    """

    def __init__(self, rows: int, cols: int):
        if rows < 1 or cols < 1:
            raise ValueError("nuclear penalty needs positive matrix dimensions")
        self.mat_shape = (int(rows), int(cols))
        self.total_len = int(rows) * int(cols)

    def _matricize(self, z: np.ndarray) -> np.ndarray:
        return z.reshape(self.mat_shape, order="F")

    def value(self, z) -> float:
        s = np.linalg.svd(self._matricize(self._check(z)), compute_uv=False)
        return float(np.sum(s))

    def prox(self, z, gamma: float) -> np.ndarray:
        z = self._check(z, gamma)
        u, s, vt = np.linalg.svd(self._matricize(z), full_matrices=False)
        s = soft_threshold(s, gamma)
        return ((u * s) @ vt).ravel(order="F")


class SeparableSum(Penalty):
    """Weighted direct sum of penalties on consecutive slices.

    ``parts`` is a sequence of (weight, penalty) pairs with strictly
    positive weights; slice boundaries follow declaration order. The prox
    with parameter gamma applies each part's prox with parameter
    gamma * weight to its slice.
    """

    def __init__(self, parts):
        parts = tuple((float(w), p) for (w, p) in parts)
        if not parts:
            raise ValueError("separable sum needs at least one part")
        if any(w <= 0 for (w, _) in parts):
            raise ValueError("separable weights must be strictly positive")
        self.parts = parts
        self._offsets = np.cumsum([0] + [p.total_len for (_, p) in parts])
        self.total_len = int(self._offsets[-1])

    def _slices(self, z: np.ndarray):
        for (w, p), lo, hi in zip(self.parts, self._offsets, self._offsets[1:]):
            yield w, p, z[lo:hi]

    def value(self, z) -> float:
        z = self._check(z)
        return float(sum(w * p.value(zi) for w, p, zi in self._slices(z)))

    def prox(self, z, gamma: float) -> np.ndarray:
        z = self._check(z, gamma)
        return np.concatenate(
            [p.prox(zi, gamma * w) for w, p, zi in self._slices(z)]
        )
