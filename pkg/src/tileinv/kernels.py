"""Sequential tile-level compute kernels.

The ten kernel forms used by the three-step inversion: Cholesky factor,
triangular solve, symmetric rank-k updates, general multiply-accumulate,
triangular inversion, triangular multiplies, and the triangular-transpose
product. All kernels are pure: they allocate a fresh output tile and never
modify their inputs. Factor/solve/invert sweeps are written out here rather
than delegated to a LAPACK binding; the multiply-heavy kernels use ndarray
matmul as their element engine.

Triangular operands are only ever read below the diagonal (np.tril guards
every access), so stale strictly-upper data can never leak into results.
"""

from __future__ import annotations

import enum
import math

import numpy as np


class KernelKind(enum.Enum):
    """One enumerant per kernel line-form of the three-step algorithm."""

    POTRF = "POTRF"
    TRSM = "TRSM"
    SYRK_SUB = "SYRK_SUB"
    SYRK_ADD_T = "SYRK_ADD_T"
    GEMM = "GEMM"
    TRTRI = "TRTRI"
    TRMM_LEFT = "TRMM_LEFT"
    TRMM_RIGHT_NEG = "TRMM_RIGHT_NEG"
    TRMM_LEFT_T = "TRMM_LEFT_T"
    LAUUM = "LAUUM"


class NotPositiveDefiniteError(ArithmeticError):
    """Cholesky hit a non-positive pivot; index mirrors LAPACK info semantics."""

    def __init__(self, index: int, detail: str = ""):
        self.index = index
        super().__init__(detail or f"non-positive pivot at step {index}")


class SingularTileError(ArithmeticError):
    """A triangular operand has a zero diagonal entry at the given index."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"zero diagonal entry at index {index}")


def _sym_from_lower(c: np.ndarray) -> np.ndarray:
    lo = np.tril(c)
    return lo + np.tril(c, -1).T


def potrf(a: np.ndarray) -> np.ndarray:
    """Cholesky factor of an SPD tile (lower part of `a` authoritative).

    Returns lower-triangular L with L @ L.T equal to the symmetrized input;
    the strictly-upper part of the result is zero.
    """
    b = a.shape[0]
    lo = np.tril(a)
    l = np.zeros_like(lo)
    for k in range(b):
        d = lo[k, k] - l[k, :k] @ l[k, :k]
        if not (d > 0.0) or not math.isfinite(d):
            raise NotPositiveDefiniteError(k)
        dk = math.sqrt(d)
        l[k, k] = dk
        if k + 1 < b:
            l[k + 1:, k] = (lo[k + 1:, k] - l[k + 1:, :k] @ l[k, :k]) / dk
    return l


def trsm_right_lt(a: np.ndarray, l: np.ndarray) -> np.ndarray:
    """Solve X @ L.T == a for X, with L lower triangular (right-solve)."""
    b = l.shape[0]
    lo = np.tril(l)
    x = np.empty_like(a)
    for j in range(b):
        if lo[j, j] == 0.0:
            raise SingularTileError(j)
        x[:, j] = (a[:, j] - x[:, :j] @ lo[j, :j]) / lo[j, j]
    return x


def syrk_sub(c: np.ndarray, a: np.ndarray) -> np.ndarray:
    """c - a @ a.T on a symmetric tile; lower part authoritative."""
    return _sym_from_lower(c) - a @ a.T


def syrk_add_t(c: np.ndarray, a: np.ndarray) -> np.ndarray:
    """c + a.T @ a on a symmetric tile; lower part authoritative."""
    return _sym_from_lower(c) + a.T @ a


def gemm(c: np.ndarray, a: np.ndarray, b: np.ndarray,
         trans_a: bool = False, sign: int = 1) -> np.ndarray:
    """Multiply-accumulate in the three shapes the inversion uses.

    (trans_a=False, sign=-1) -> c - a @ b.T   (factorization update)
    (trans_a=False, sign=+1) -> c + a @ b     (triangular-inverse update)
    (trans_a=True,  sign=+1) -> c + a.T @ b   (triangular-product update)

    Any other combination is outside the contract.
    """
    if not trans_a and sign == -1:
        return c - a @ b.T
    if not trans_a and sign == 1:
        return c + a @ b
    if trans_a and sign == 1:
        return c + a.T @ b
    raise ValueError(f"unsupported gemm shape: trans_a={trans_a}, sign={sign}")


def trtri(l: np.ndarray) -> np.ndarray:
    """Invert a lower-triangular tile by forward substitution on L @ X == I."""
    b = l.shape[0]
    lo = np.tril(l)
    x = np.zeros_like(lo)
    for i in range(b):
        if lo[i, i] == 0.0:
            raise SingularTileError(i)
        x[i, :i] = -(lo[i, :i] @ x[:i, :i]) / lo[i, i]
        x[i, i] = 1.0 / lo[i, i]
    return x


def trmm_left(a: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """tril(tri) @ a."""
    return np.tril(tri) @ a


def trmm_right_neg(a: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """-a @ tril(tri)."""
    return -(a @ np.tril(tri))


def trmm_left_t(a: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """tril(tri).T @ a."""
    return np.tril(tri).T @ a


def lauum(l: np.ndarray) -> np.ndarray:
    """L.T @ L for a lower-triangular tile; result symmetric."""
    lo = np.tril(l)
    return lo.T @ lo
