"""Tiled storage of symmetric matrices and SPD test-matrix generation.

A matrix of order n is stored as a t x t grid of square b x b float64 blocks
(n = b * t, exact divisibility required). For symmetric data only the tiles
(i, j) with i >= j are authoritative; strictly-upper tiles are kept so that
dense round trips are exact, but no generated task ever reads them.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class InvalidSizeError(ValueError):
    """Unusable matrix/tile geometry (zero order, non-divisible order)."""


class ShapeMismatchError(ValueError):
    """Two dense matrices were expected to share a shape."""


class TileId(NamedTuple):
    """Address of one tile: matrix tag plus grid coordinates."""

    label: str
    row: int
    col: int

    def __str__(self) -> str:
        return f"{self.label}[{self.row},{self.col}]"


class TileMatrix:
    """Order-n matrix held as a t x t grid of b x b float64 tiles.

    Not internally synchronized: the scheduler guarantees exclusive access
    to a tile while a task writes it and shared access while tasks read it.
    """

    def __init__(self, n: int, b: int, tiles, label: str = "A"):
        if n < 1 or b < 1:
            raise InvalidSizeError(f"matrix order {n} and tile order {b} must be >= 1")
        if n % b:
            raise InvalidSizeError(f"matrix order {n} not divisible by tile order {b}")
        self.n = n
        self.b = b
        self.t = n // b
        self.tiles = tiles
        self.label = label

    def tile(self, i: int, j: int) -> np.ndarray:
        return self.tiles[i][j]

    def set_tile(self, i: int, j: int, data: np.ndarray) -> None:
        self.tiles[i][j] = data

    def tile_id(self, i: int, j: int) -> TileId:
        return TileId(self.label, i, j)

    def lower_ids(self) -> list[TileId]:
        """Ids of the authoritative tiles (row >= col), row-major."""
        return [
            TileId(self.label, i, j) for i in range(self.t) for j in range(i + 1)
        ]


def generate_spd(n: int, seed: int) -> np.ndarray:
    """Deterministic well-conditioned SPD test matrix M @ M.T + n * I.

    M has entries uniform on [0, 1) from a PCG64 stream, so identical
    (n, seed) pairs give bitwise-identical output. The n * I shift keeps the
    smallest eigenvalue at n or above, so residual tolerances stay meaningful.
    """
    if n < 1:
        raise InvalidSizeError(f"matrix order must be >= 1, got {n}")
    m = np.random.default_rng(seed).random((n, n))
    a = m @ m.T + n * np.eye(n)
    # Mirror the lower part so the result is exactly symmetric bitwise.
    return np.tril(a) + np.tril(a, -1).T


def from_dense(m: np.ndarray, b: int, label: str = "A") -> TileMatrix:
    """Split a dense square matrix into b x b tiles (order must divide by b)."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidSizeError(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if n < 1 or b < 1 or n % b:
        raise InvalidSizeError(f"matrix order {n} not divisible by tile order {b}")
    if not np.isfinite(m).all():
        raise ValueError("matrix contains non-finite values")
    t = n // b
    tiles = [
        [np.ascontiguousarray(m[i * b:(i + 1) * b, j * b:(j + 1) * b]) for j in range(t)]
        for i in range(t)
    ]
    return TileMatrix(n, b, tiles, label)


def to_dense(tm: TileMatrix) -> np.ndarray:
    """Reassemble the dense matrix, copying every tile verbatim.

    Exact inverse of from_dense. Outputs of symmetric algorithms carry stale
    strictly-upper tiles; use symmetrize_lower on the result to mirror the
    authoritative lower part.
    """
    b = tm.b
    out = np.empty((tm.n, tm.n), dtype=np.float64)
    for i in range(tm.t):
        for j in range(tm.t):
            out[i * b:(i + 1) * b, j * b:(j + 1) * b] = tm.tile(i, j)
    return out


def symmetrize_lower(m: np.ndarray) -> np.ndarray:
    """Mirror the lower triangle onto the upper one."""
    return np.tril(m) + np.tril(m, -1).T


def copy_lower(src: TileMatrix, dst_label: str) -> TileMatrix:
    """Deep-copy the lower tiles into a fresh working matrix tagged dst_label.

    Strictly-upper tiles of the copy are zero; they are never read.
    """
    t = src.t
    tiles = [
        [
            src.tile(i, j).copy() if i >= j else np.zeros((src.b, src.b))
            for j in range(t)
        ]
        for i in range(t)
    ]
    return TileMatrix(src.n, src.b, tiles, dst_label)


def max_abs_diff(a: np.ndarray, b: np.ndarray) -> float:
    """Largest entrywise absolute difference between two equal-shape matrices."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - b)))


def save_dense_csv(m: np.ndarray, path) -> None:
    """Write a dense matrix as CSV: one row per line, '.' decimal, ',' separator."""
    np.savetxt(path, np.asarray(m, dtype=np.float64), delimiter=",", fmt="%.17g")


def load_dense_csv(path) -> np.ndarray:
    """Read a dense matrix written by save_dense_csv (exact float64 round trip)."""
    m = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return m
