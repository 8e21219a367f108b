"""Plain-text matrix serialization.

Format: a header line ``rows cols`` followed by ``rows`` lines of
space-separated decimals. Vectors are stored as single-column matrices.
"""

from __future__ import annotations

import numpy as np

__all__ = ["save_matrix", "load_matrix", "save_vector", "load_vector"]


def save_matrix(path, matrix) -> None:
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w") as fh:
        fh.write(f"{m.shape[0]} {m.shape[1]}\n")
        for row in m:
            fh.write(" ".join(repr(float(val)) for val in row) + "\n")


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: malformed header, expected 'rows cols'")
        rows, cols = int(header[0]), int(header[1])
        data = np.loadtxt(fh, ndmin=2)
    if data.shape != (rows, cols):
        raise ValueError(
            f"{path}: header promises {rows}x{cols}, file holds {data.shape}"
        )
    return data


def save_vector(path, vector) -> None:
    v = np.asarray(vector, dtype=float)
    if v.ndim != 1:
        raise ValueError("save_vector expects a 1-d array")
    save_matrix(path, v[:, None])


def load_vector(path) -> np.ndarray:
    m = load_matrix(path)
    if m.shape[1] != 1:
        raise ValueError(f"{path}: expected a single-column matrix, got {m.shape}")
    return m[:, 0]
