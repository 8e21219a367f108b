"""Linear operators for regularized least-squares models.

Every operator knows its shape, applies itself and its adjoint to 1-d
vectors, and can materialize a dense matrix (``to_dense``) so that
structured fast paths can be checked against a dense oracle. Operators are
immutable after construction and safe to share between workers.

Vectorized images follow the column-major (``order='F'``) convention: a
vector of length n*n is the stack of the columns of an n-by-n image.

Index sets accepted by factories (e.g. :func:`make_mask`) are 1-based, as
is customary in the signal-processing literature; they are converted to
0-based indices once, at construction.
"""

from __future__ import annotations

import warnings

import numpy as np

__all__ = [
    "LinearOperator",
    "DenseOperator",
    "Identity",
    "ZeroOperator",
    "FirstDifference",
    "VerticalDifference",
    "HorizontalDifference",
    "KroneckerProduct",
    "DiagonalMask",
    "VStack",
    "op_norm",
    "make_diff_1d",
    "make_diff_2d",
    "make_blur",
    "make_mask",
    "vstack",
]


def _as_vector(x, n: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"{what}: expected a vector of shape ({n},), got {x.shape}")
    return x


class LinearOperator:
    """A rows-by-cols linear map with an adjoint.

    Subclasses implement ``apply``, ``adjoint_apply`` and ``to_dense``;
    ``apply`` maps cols-dimensional vectors to rows-dimensional ones and
    ``adjoint_apply`` maps the reverse, with ``<L x, y> == <x, L^T y>``
    for all x, y.
    """

    rows: int
    cols: int

    def apply(self, x) -> np.ndarray:
        raise NotImplementedError

    def adjoint_apply(self, y) -> np.ndarray:
        raise NotImplementedError

    def to_dense(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.rows}x{self.cols})"


class DenseOperator(LinearOperator):
    """Dense row-major matrix, the canonical materialization of every kind."""

    def __init__(self, matrix):
        m = np.array(matrix, dtype=float)
        if m.ndim != 2:
            raise ValueError(f"dense operator needs a 2-d matrix, got ndim={m.ndim}")
        m.setflags(write=False)
        self.matrix = m
        self.rows, self.cols = m.shape

    def apply(self, x):
        return self.matrix @ _as_vector(x, self.cols, "apply")

    def adjoint_apply(self, y):
        return self.matrix.T @ _as_vector(y, self.rows, "adjoint_apply")

    def to_dense(self):
        return np.array(self.matrix)


class Identity(LinearOperator):
    def __init__(self, n: int):
        if n < 1:
            raise ValueError("identity needs n >= 1")
        self.rows = self.cols = int(n)

    def apply(self, x):
        return _as_vector(x, self.cols, "apply").copy()

    def adjoint_apply(self, y):
        return _as_vector(y, self.rows, "adjoint_apply").copy()

    def to_dense(self):
        return np.eye(self.rows)


class ZeroOperator(LinearOperator):
    """The zero map; stands in for an absent enhancement matrix B."""

    def __init__(self, rows: int, cols: int | None = None):
        self.rows = int(rows)
        self.cols = int(rows if cols is None else cols)

    def apply(self, x):
        _as_vector(x, self.cols, "apply")
        return np.zeros(self.rows)

    def adjoint_apply(self, y):
        _as_vector(y, self.rows, "adjoint_apply")
        return np.zeros(self.cols)

    def to_dense(self):
        return np.zeros((self.rows, self.cols))


class FirstDifference(LinearOperator):
    """Forward first-order difference, (n-1)-by-n: (Dx)_i = x_{i+1} - x_i."""

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("first difference needs n >= 2")
        self.rows = n - 1
        self.cols = n

    def apply(self, x):
        return np.diff(_as_vector(x, self.cols, "apply"))

    def adjoint_apply(self, y):
        y = _as_vector(y, self.rows, "adjoint_apply")
        out = np.zeros(self.cols)
        out[:-1] -= y
        out[1:] += y
        return out

    def to_dense(self):
        return np.diff(np.eye(self.cols), axis=0)


class VerticalDifference(LinearOperator):
    """Differences down the columns of an n-by-n image, n(n-1)-by-n^2.

    Block-diagonal repetition of the 1-d difference, one block per image
    column under column-major vectorization.
    """

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("vertical difference needs n >= 2")
        self.n = n
        self.rows = n * (n - 1)
        self.cols = n * n

    def apply(self, x):
        img = _as_vector(x, self.cols, "apply").reshape(self.n, self.n, order="F")
        return np.diff(img, axis=0).ravel(order="F")

    def adjoint_apply(self, y):
        y = _as_vector(y, self.rows, "adjoint_apply").reshape(self.n - 1, self.n, order="F")
        out = np.zeros((self.n, self.n))
        out[:-1, :] -= y
        out[1:, :] += y
        return out.ravel(order="F")

    def to_dense(self):
        n = self.n
        return np.kron(np.eye(n), np.diff(np.eye(n), axis=0))


class HorizontalDifference(LinearOperator):
    """Differences across the rows of an n-by-n image, n(n-1)-by-n^2.

    Row i of the matrix carries -1 at position i and +1 at position i+n,
    i.e. (Hx)_i = x_{i+n} - x_i for the column-major stacked image.
    """

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("horizontal difference needs n >= 2")
        self.n = n
        self.rows = n * (n - 1)
        self.cols = n * n

    def apply(self, x):
        x = _as_vector(x, self.cols, "apply")
        return x[self.n:] - x[:-self.n]

    def adjoint_apply(self, y):
        y = _as_vector(y, self.rows, "adjoint_apply")
        out = np.zeros(self.cols)
        out[:-self.n] -= y
        out[self.n:] += y
        return out

    def to_dense(self):
        n = self.n
        return np.kron(np.diff(np.eye(n), axis=0), np.eye(n))


class KroneckerProduct(LinearOperator):
    """Kronecker product ``left (x) right`` acting on column-major stacks.

    ``(left (x) right) vec(X) = vec(right @ X @ left.T)`` for X of shape
    (right.cols, left.cols).
    """

    def __init__(self, left, right):
        self.left = np.array(left, dtype=float)
        self.right = np.array(right, dtype=float)
        if self.left.ndim != 2 or self.right.ndim != 2:
            raise ValueError("kronecker factors must be 2-d matrices")
        self.left.setflags(write=False)
        self.right.setflags(write=False)
        self.rows = self.left.shape[0] * self.right.shape[0]
        self.cols = self.left.shape[1] * self.right.shape[1]

    def apply(self, x):
        x = _as_vector(x, self.cols, "apply")
        X = x.reshape(self.right.shape[1], self.left.shape[1], order="F")
        return (self.right @ X @ self.left.T).ravel(order="F")

    def adjoint_apply(self, y):
        y = _as_vector(y, self.rows, "adjoint_apply")
        Y = y.reshape(self.right.shape[0], self.left.shape[0], order="F")
        return (self.right.T @ Y @ self.left).ravel(order="F")

    def to_dense(self):
        return np.kron(self.left, self.right)


class DiagonalMask(LinearOperator):
    """n-by-n diagonal 0/1 selector: keeps the entries in the kept set."""

    def __init__(self, n: int, kept_zero_based):
        idx = np.unique(np.asarray(list(kept_zero_based), dtype=int))
        if idx.size and (idx[0] < 0 or idx[-1] >= n):
            raise ValueError(f"mask indices out of range for n={n}")
        self.rows = self.cols = int(n)
        idx.setflags(write=False)
        self.kept = idx

    def apply(self, x):
        x = _as_vector(x, self.cols, "apply")
        out = np.zeros(self.cols)
        out[self.kept] = x[self.kept]
        return out

    # the matrix is symmetric
    adjoint_apply = apply

    def to_dense(self):
        d = np.zeros(self.cols)
        d[self.kept] = 1.0
        return np.diag(d)


class VStack(LinearOperator):
    """Vertical stack of operators sharing a common domain."""

    def __init__(self, children):
        children = tuple(children)
        if not children:
            raise ValueError("vstack needs at least one child")
        cols = children[0].cols
        for c in children:
            if c.cols != cols:
                raise ValueError("vstack children must share the column dimension")
        self.children = children
        self.cols = cols
        self.rows = sum(c.rows for c in children)
        self._offsets = np.cumsum([0] + [c.rows for c in children])

    def apply(self, x):
        x = _as_vector(x, self.cols, "apply")
        return np.concatenate([c.apply(x) for c in self.children])

    def adjoint_apply(self, y):
        y = _as_vector(y, self.rows, "adjoint_apply")
        out = np.zeros(self.cols)
        for c, lo, hi in zip(self.children, self._offsets, self._offsets[1:]):
            out += c.adjoint_apply(y[lo:hi])
        return out

    def to_dense(self):
        return np.vstack([c.to_dense() for c in self.children])


def op_norm(op: LinearOperator, tol: float = 1e-9, max_iter: int = 10_000,
            seed: int = 0) -> float:
    """Largest singular value of ``op`` by power iteration on L^T L.

    Deterministic for a fixed seed. Stops when the Rayleigh quotient of
    L^T L stagnates to relative tolerance ``tol``; warns (and returns the
    current estimate) if that never happens within ``max_iter`` sweeps.
    Returns 0.0 for the zero operator.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    cache_key = (tol, max_iter, seed)
    cache = getattr(op, "_op_norm_cache", None)
    if cache is not None and cache_key in cache:
        return cache[cache_key]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.cols)
    nx = np.linalg.norm(x)
    x /= nx
    lam = 0.0
    result = None
    for _ in range(max_iter):
        z = op.adjoint_apply(op.apply(x))
        nz = np.linalg.norm(z)
        if nz == 0.0:
            # x is a null vector; a random start is null for every x only
            # when the operator itself is zero
            result = 0.0
            break
        lam_new = float(x @ z)  # Rayleigh quotient of L^T L, nondecreasing
        x = z / nz
        if abs(lam_new - lam) <= tol * max(lam_new, np.finfo(float).tiny):
            result = float(np.sqrt(lam_new))
            break
        lam = lam_new
    if result is None:
        warnings.warn(
            f"op_norm: power iteration did not reach tol={tol:g} in {max_iter} sweeps",
            RuntimeWarning,
        )
        result = float(np.sqrt(lam))
    if cache is None:
        cache = {}
        try:
            op._op_norm_cache = cache
        except AttributeError:
            return result
    cache[cache_key] = result
    return result


def make_diff_1d(n: int) -> FirstDifference:
    """First-order difference operator, (n-1)-by-n."""
    return FirstDifference(n)


def make_diff_2d(n: int) -> tuple[VerticalDifference, HorizontalDifference]:
    """Vertical and horizontal difference pair for n-by-n images."""
    return VerticalDifference(n), HorizontalDifference(n)


def make_blur(n: int) -> KroneckerProduct:
    """Separable Gaussian blur on n-by-n images.

    The 1-d kernel matrix has entries exp(-|i-j|^2 / 1.62) / sqrt(1.62 pi)
    for |i-j| < 6 and zero beyond; the 2-d blur is its Kronecker square.
    """
    if n < 2:
        raise ValueError("blur needs n >= 2")
    i = np.arange(n)
    d = np.abs(i[:, None] - i[None, :]).astype(float)
    bar = np.where(d < 6, np.exp(-d ** 2 / 1.62) / np.sqrt(1.62 * np.pi), 0.0)
    return KroneckerProduct(bar, bar)


def make_mask(n: int, kept_one_based) -> DiagonalMask:
    """Diagonal 0/1 mask keeping the (1-based) index set ``kept_one_based``."""
    idx = np.asarray(sorted(kept_one_based), dtype=int)
    if idx.size and (idx[0] < 1 or idx[-1] > n):
        raise ValueError(f"mask indices must lie in 1..{n}")
    return DiagonalMask(n, idx - 1)


def vstack(ops) -> VStack:
    return VStack(ops)
