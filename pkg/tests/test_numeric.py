import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pixsim.numeric import (
    DimensionMismatch, SingularMatrixError, inf_norm, lu_factor, lu_solve, solve,
)


def test_scalar():
    f = lu_factor([[2.0]])
    assert f.lower().tolist() == [[1.0]]
    assert f.upper().tolist() == [[2.0]]


def test_identity_has_trivial_pivots():
    f = lu_factor(np.eye(4))
    assert np.array_equal(f.lower(), np.eye(4))
    assert np.array_equal(f.upper(), np.eye(4))
    assert list(f.perm) == [0, 1, 2, 3]


def test_random_8x8_product():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(8, 8)) + 8 * np.eye(8)
    f = lu_factor(a)
    pa = f.permutation_matrix() @ a
    assert np.max(np.abs(pa - f.lower() @ f.upper())) <= 1e-10 * np.max(np.abs(a))


def test_pivoting_handles_zero_leading_entry():
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(solve(a, [2.0, 3.0]), [3.0, 2.0])


def test_identity_solve():
    assert solve(np.eye(2), [3.0, -1.0]).tolist() == [3.0, -1.0]


def test_diagonal_solve():
    assert np.allclose(solve([[2.0, 0.0], [0.0, 4.0]], [2.0, 2.0]), [1.0, 0.5])


def _cramer(a, b):
    d = np.linalg.det(a)
    out = []
    for k in range(len(b)):
        ak = a.copy()
        ak[:, k] = b
        out.append(np.linalg.det(ak) / d)
    return np.array(out)


def test_matches_cramer():
    a = np.array([[4.0, -2.0, 1.0], [-2.0, 4.0, -2.0], [1.0, -2.0, 3.0]])
    b = np.array([11.0, -16.0, 17.0])
    assert np.max(np.abs(solve(a, b) - _cramer(a, b))) <= 1e-10


def test_zero_row_is_singular():
    a = np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0], [4.0, 5.0, 6.0]])
    with pytest.raises(SingularMatrixError) as exc:
        lu_factor(a)
    assert exc.value.column >= 0


def test_dependent_rows_are_singular():
    with pytest.raises(SingularMatrixError):
        lu_factor([[1.0, 2.0], [2.0, 4.0]])


def test_shape_errors():
    with pytest.raises(DimensionMismatch):
        lu_factor(np.ones((2, 3)))
    with pytest.raises(DimensionMismatch):
        lu_solve(lu_factor(np.eye(3)), [1.0, 2.0])


def test_inf_norm():
    assert inf_norm([1.0, -3.0, 2.0]) == 3.0


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 64), seed=st.integers(0, 2**32 - 1))
def test_factor_reconstructs(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, size=(n, n)) + n * np.eye(n)
    f = lu_factor(a)
    pa = f.permutation_matrix() @ a
    assert np.max(np.abs(pa - f.lower() @ f.upper())) <= 1e-10 * np.max(np.abs(a))
    x0 = rng.normal(size=n)
    x = lu_solve(f, a @ x0)
    assert np.max(np.abs(x - x0)) <= 1e-8 * max(1.0, np.max(np.abs(x0)))
