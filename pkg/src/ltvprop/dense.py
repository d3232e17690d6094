"""Dense real matrix helpers.

Matrices are plain 2-D float64 numpy arrays. ``as_matrix`` is the single
validation gate: it rejects non-finite entries and returns a read-only view,
so everything downstream can assume well-formed input.
"""

from __future__ import annotations

import math

import numpy as np

SINGULAR_RTOL = 1e-14


class ShapeError(ValueError):
    """Operand shapes are incompatible."""


class SingularMatrixError(ArithmeticError):
    """LU elimination met a pivot below the singularity threshold."""

    def __init__(self, pivot_index: int, pivot: float):
        super().__init__(f"matrix is singular to working precision (pivot {pivot_index}: |{pivot:.3e}|)")
        self.pivot_index = pivot_index
        self.pivot = pivot


def as_matrix(data) -> np.ndarray:
    """Validate ``data`` as a finite 2-D real matrix and return a read-only copy."""
    a = np.array(data, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    a.flags.writeable = False
    return a


def identity(n: int) -> np.ndarray:
    return as_matrix(np.eye(n))


def _require_square(a: np.ndarray) -> None:
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got {a.shape[0]}x{a.shape[1]}")


def mat_mul(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


def lu_factor(a) -> tuple[np.ndarray, np.ndarray, int]:
    """LU factorization with partial pivoting.

    Returns ``(lu, perm, sign)`` where ``lu`` packs the unit-lower factor
    below the diagonal and the upper factor on and above it, ``perm`` is the
    row permutation and ``sign`` its parity (+1/-1).

    Raises:
        SingularMatrixError: a pivot is smaller than ``1e-14 * max|a|``.
    """
    a = np.asarray(a, dtype=np.float64)
    _require_square(a)
    n = a.shape[0]
    lu = a.copy()
    perm = np.arange(n)
    sign = 1
    threshold = SINGULAR_RTOL * float(np.max(np.abs(a))) if a.size else 0.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        pivot = lu[p, k]
        if abs(pivot) < threshold or pivot == 0.0:
            raise SingularMatrixError(k, float(pivot))
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
            sign = -sign
        lu[k + 1 :, k] /= pivot
        lu[k + 1 :, k + 1 :] -= np.outer(lu[k + 1 :, k], lu[k, k + 1 :])
    return lu, perm, sign


def lu_solve(lu: np.ndarray, perm: np.ndarray, b) -> np.ndarray:
    """Solve ``a x = b`` from a packed factorization (``b`` may be a matrix)."""
    b = np.asarray(b, dtype=np.float64)
    vector = b.ndim == 1
    y = b[perm].reshape(b.shape[0], -1).copy()
    n = lu.shape[0]
    for i in range(n):
        y[i] -= lu[i, :i] @ y[:i]
    for i in range(n - 1, -1, -1):
        y[i] = (y[i] - lu[i, i + 1 :] @ y[i + 1 :]) / lu[i, i]
    return y[:, 0] if vector else y


def mat_inverse(a) -> np.ndarray:
    lu, perm, _ = lu_factor(a)
    return lu_solve(lu, perm, np.eye(lu.shape[0]))


def mat_det(a) -> float:
    """Determinant from the LU factors; exactly singular input returns 0."""
    a = np.asarray(a, dtype=np.float64)
    _require_square(a)
    try:
        lu, _, sign = lu_factor(a)
    except SingularMatrixError:
        # Below-threshold pivot: finish elimination without the guard.
        return _det_unguarded(a)
    return sign * float(np.prod(np.diag(lu)))


def _det_unguarded(a: np.ndarray) -> float:
    lu = a.copy()
    n = lu.shape[0]
    sign = 1.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if lu[p, k] == 0.0:
            return 0.0
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            sign = -sign
        lu[k + 1 :, k] /= lu[k, k]
        lu[k + 1 :, k + 1 :] -= np.outer(lu[k + 1 :, k], lu[k, k + 1 :])
    return sign * float(np.prod(np.diag(lu)))


def mat_norm_max(a) -> float:
    a = np.asarray(a, dtype=np.float64)
    return float(np.max(np.abs(a))) if a.size else 0.0


# Taylor degree 18 after scaling to ||a||_1 <= 1/2 keeps the remainder near
# 1e-22 relative, well inside double precision.
_TAYLOR_DEGREE = 18


def mat_expm(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring around a Taylor core."""
    a = np.asarray(a, dtype=np.float64)
    _require_square(a)
    n = a.shape[0]
    norm1 = float(np.max(np.sum(np.abs(a), axis=0)))
    s = 0
    if norm1 > 0.5:
        s = int(math.ceil(math.log2(norm1 / 0.5)))
    scaled = a / (2.0**s)
    # Horner evaluation of sum_k scaled^k / k!
    result = np.eye(n)
    for k in range(_TAYLOR_DEGREE, 0, -1):
        result = np.eye(n) + (scaled @ result) / k
    for _ in range(s):
        result = result @ result
    return result
