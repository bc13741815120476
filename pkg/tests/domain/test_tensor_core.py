import numpy as np
import pytest

from app.domain.errors import DimensionMismatchError
from app.domain.tensor_core import (
    as_matrix,
    elementwise,
    l2_normalize_rows,
    l2_normalize_rows_backward,
    matmul,
    squared_distances,
)


def naive_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


class TestMatmul:
    def test_hand_example(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[5.0, 6.0], [7.0, 8.0]])
        np.testing.assert_array_equal(matmul(a, b), [[19.0, 22.0], [43.0, 50.0]])

    def test_identity(self):
        m = np.random.default_rng(0).standard_normal((2, 2))
        np.testing.assert_array_equal(matmul(np.eye(2), m), m)

    def test_matches_triple_loop(self):
        rng = np.random.default_rng(1)
        a, b = rng.standard_normal((4, 5)), rng.standard_normal((5, 3))
        np.testing.assert_allclose(matmul(a, b), naive_matmul(a, b), atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            matmul(np.ones((2, 3)), np.ones((2, 3)))


class TestNormalize:
    def test_three_four_five(self):
        np.testing.assert_allclose(l2_normalize_rows(np.array([[3.0, 4.0]])), [[0.6, 0.8]])

    def test_zero_row_preserved(self):
        np.testing.assert_array_equal(l2_normalize_rows(np.zeros((1, 2)), eps=1e-12), [[0.0, 0.0]])

    def test_unit_row_unchanged(self):
        np.testing.assert_array_equal(l2_normalize_rows(np.array([[1.0, 0.0]])), [[1.0, 0.0]])

    def test_rows_have_unit_norm(self):
        m = np.random.default_rng(2).standard_normal((10, 4))
        np.testing.assert_allclose(np.linalg.norm(l2_normalize_rows(m), axis=1), 1.0, atol=1e-12)

    def test_backward_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        m = rng.standard_normal((3, 4))
        g = rng.standard_normal((3, 4))
        analytic = l2_normalize_rows_backward(m, g)

        h = 1e-6
        numeric = np.zeros_like(m)
        for idx in np.ndindex(m.shape):
            plus, minus = m.copy(), m.copy()
            plus[idx] += h
            minus[idx] -= h
            numeric[idx] = np.sum(g * (l2_normalize_rows(plus) - l2_normalize_rows(minus))) / (2 * h)
        np.testing.assert_allclose(analytic, numeric, atol=1e-7)

    def test_non_positive_eps_rejected(self):
        with pytest.raises(ValueError):
            l2_normalize_rows(np.ones((1, 2)), eps=0.0)


class TestElementwise:
    def test_add_zero(self):
        m = np.arange(6.0).reshape(2, 3)
        np.testing.assert_array_equal(elementwise("add", m, np.zeros((2, 3))), m)

    def test_self_subtraction(self):
        m = np.array([[1.0, 2.0]])
        np.testing.assert_array_equal(elementwise("sub", m, m), [[0.0, 0.0]])

    def test_scalar_broadcast(self):
        np.testing.assert_array_equal(elementwise("mul", np.array([[2.0, 3.0]]), 0.5), [[1.0, 1.5]])

    def test_guarded_division(self):
        out = elementwise("div", np.array([[1.0, 1.0]]), np.array([[0.0, 2.0]]), eps=1e-6)
        np.testing.assert_allclose(out, [[1e6, 0.5]])

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            elementwise("add", np.ones((2, 2)), np.ones((2, 3)))


def test_squared_distance_matches_cosine_on_unit_rows():
    rng = np.random.default_rng(4)
    a = l2_normalize_rows(rng.standard_normal((5, 3)))
    b = l2_normalize_rows(rng.standard_normal((4, 3)))
    np.testing.assert_allclose(squared_distances(a, b), 2.0 - 2.0 * a @ b.T, atol=1e-12)


def test_as_matrix_promotes_vector():
    assert as_matrix([1, 2, 3]).shape == (1, 3)
    with pytest.raises(DimensionMismatchError):
        as_matrix(np.zeros((2, 2, 2)))
