import math

import numpy as np
import pytest
import mpmath
from hypothesis import given, settings
from hypothesis import strategies as st

from ltvprop.dense import (
    ShapeError,
    SingularMatrixError,
    as_matrix,
    mat_det,
    mat_expm,
    mat_inverse,
    mat_mul,
    mat_norm_max,
)


def taylor_expm(a, terms=50):
    """Plain term-by-term series; only valid for small norms."""
    result = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for k in range(1, terms):
        term = term @ a / k
        result = result + term
    return result


def test_as_matrix_rejects_nonfinite():
    with pytest.raises(ValueError):
        as_matrix([[1.0, np.nan]])
    with pytest.raises(ValueError):
        as_matrix([[np.inf]])
    m = as_matrix([[1, 2], [3, 4]])
    assert m.dtype == np.float64
    assert not m.flags.writeable


@pytest.mark.parametrize(
    "a, b, expected",
    [
        ([[1, 0], [0, 1]], [[3, 4], [5, 6]], [[3, 4], [5, 6]]),
        ([[0, 1], [0, 0]], [[0, 1], [0, 0]], [[0, 0], [0, 0]]),
        ([[1, 2]], [[3], [4]], [[11]]),
    ],
)
def test_mat_mul(a, b, expected):
    np.testing.assert_array_equal(mat_mul(as_matrix(a), as_matrix(b)), expected)


def test_mat_mul_shape_error_names_shapes():
    with pytest.raises(ShapeError, match="1x2.*1x2"):
        mat_mul(as_matrix([[1, 2]]), as_matrix([[1, 2]]))


def test_mat_inverse_examples():
    np.testing.assert_allclose(mat_inverse([[2, 0], [0, 4]]), [[0.5, 0], [0, 0.25]])
    np.testing.assert_allclose(mat_inverse([[1, 1], [0, 1]]), [[1, -1], [0, 1]])
    with pytest.raises(SingularMatrixError) as info:
        mat_inverse([[1, 2], [2, 4]])
    assert info.value.pivot_index == 1


def test_mat_det_examples():
    assert mat_det(np.eye(3)) == 1.0
    assert mat_det([[0, 1], [-1, 0]]) == pytest.approx(1.0)
    assert mat_det([[1, 2], [3, 4]]) == pytest.approx(-2.0)
    assert mat_det([[1, 2], [2, 4]]) == 0.0


def test_mat_norm_max():
    assert mat_norm_max([[1, -3], [2, 0]]) == 3
    assert mat_norm_max(np.zeros((2, 2))) == 0
    assert mat_norm_max([[-7]]) == 7


def test_mat_expm_examples():
    np.testing.assert_array_equal(mat_expm(np.zeros((3, 3))), np.eye(3))
    np.testing.assert_allclose(mat_expm([[0, 1], [0, 0]]), [[1, 1], [0, 1]], rtol=0, atol=1e-15)
    np.testing.assert_allclose(
        mat_expm(np.diag([math.log(2), math.log(3)])), [[2, 0], [0, 3]], rtol=1e-14, atol=1e-15
    )


def _random_matrix(seed, n, scale=1.0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-scale, scale, size=(n, n))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 8))
def test_inverse_property(seed, n):
    # diagonal shift keeps the draw well conditioned
    a = _random_matrix(seed, n) + n * np.eye(n)
    assert mat_norm_max(mat_mul(a, mat_inverse(a)) - np.eye(n)) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_det_multiplicative(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, (n, n)) + 2 * np.eye(n)
    b = rng.uniform(-1, 1, (n, n)) + 2 * np.eye(n)
    lhs = mat_det(mat_mul(a, b))
    rhs = mat_det(a) * mat_det(b)
    assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_expm_matches_taylor_oracle(seed, n):
    a = _random_matrix(seed, n)
    norm = mat_norm_max(a)
    if norm > 0:
        a = a * (2.0 / norm) * np.random.default_rng(seed).uniform(0, 1)
    expected = taylor_expm(a)
    assert mat_norm_max(mat_expm(a) - expected) <= 1e-12 * max(1.0, mat_norm_max(expected))


@pytest.mark.parametrize("seed", range(10))
def test_expm_relative_error_up_to_norm_10(seed):
    a = _random_matrix(seed, 4)
    a *= 10.0 / mat_norm_max(a)
    with mpmath.workdps(40):
        expected = np.array(mpmath.expm(mpmath.matrix(a.tolist())).tolist(), dtype=float)
    assert mat_norm_max(mat_expm(a) - expected) <= 1e-12 * mat_norm_max(expected)
