import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lrtc.errors import DomainError, NumericalError, ParameterError
from lrtc.prox import matrix_shrink, numerical_rank, svd_full, vector_shrink
from oracles import diagonal_prox_grid, prox_objective


def test_vector_shrink_cases():
    np.testing.assert_array_equal(vector_shrink([3.0, 1.0, 0.5], 1.0), [2.0, 0.0, 0.0])
    np.testing.assert_array_equal(vector_shrink([0.2, 0.7], 0.7), [0.0, 0.0])
    np.testing.assert_array_equal(vector_shrink([5.0], 2.0), [3.0])


def test_vector_shrink_errors():
    with pytest.raises(ParameterError):
        vector_shrink([1.0], 0.0)
    with pytest.raises(ParameterError):
        vector_shrink([1.0], -2.0)
    with pytest.raises(DomainError):
        vector_shrink([1.0, -0.1], 0.5)


@given(
    arrays(np.float64, st.integers(1, 8), elements=st.floats(0, 100)),
    st.floats(1e-3, 50),
)
def test_vector_shrink_is_below_input(x, tau):
    out = vector_shrink(x, tau)
    assert np.all(out >= 0) and np.all(out <= x)


def test_svd_full_cases():
    np.testing.assert_allclose(svd_full(np.eye(3)).sigma, [1, 1, 1])
    u = np.array([3.0, 4.0]) / 5.0
    v = np.array([1.0, 2.0, 2.0]) / 3.0
    np.testing.assert_allclose(svd_full(np.outer(u, v)).sigma, [1, 0], atol=1e-15)
    np.testing.assert_allclose(svd_full(np.diag([3.0, 2.0, 1.0])).sigma, [3, 2, 1])


@pytest.mark.parametrize("m,n", [(4, 4), (3, 7), (9, 2)])
def test_svd_factors_invariants(rng, m, n):
    a = rng.standard_normal((m, n))
    f = svd_full(a)
    r = min(m, n)
    assert f.u.shape == (m, r) and f.v.shape == (n, r) and f.sigma.shape == (r,)
    assert np.all(np.diff(f.sigma) <= 0) and np.all(f.sigma >= 0)
    assert np.linalg.norm(f.u.T @ f.u - np.eye(r)) <= 1e-10 * r
    assert np.linalg.norm(f.v.T @ f.v - np.eye(r)) <= 1e-10 * r
    assert np.linalg.norm(f.reconstruct() - a) <= 1e-10 * (1 + np.linalg.norm(a))


def test_svd_rejects_non_finite():
    with pytest.raises(NumericalError):
        svd_full(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_matrix_shrink_zero_and_large_tau(rng):
    assert not matrix_shrink(np.zeros((3, 5)), 1.0).any()
    a = rng.standard_normal((4, 6))
    assert not matrix_shrink(a, svd_full(a).sigma[0]).any()


def test_matrix_shrink_diagonal_against_grid_oracle():
    a = np.diag([3.0, 2.0, 1.0])
    out = matrix_shrink(a, 1.5)
    np.testing.assert_allclose(out, np.diag([1.5, 0.5, 0.0]), atol=1e-14)
    # the grid minimizer over diagonal candidates lands on the same point
    np.testing.assert_allclose(diagonal_prox_grid([3.0, 2.0, 1.0], 1.5), [1.5, 0.5, 0.0], atol=1e-9)


def test_matrix_shrink_prox_optimality(rng):
    for _ in range(5):
        a = rng.standard_normal((4, 4))
        tau = float(rng.uniform(0.1, 1.5))
        z = matrix_shrink(a, tau)
        best = prox_objective(z, a, tau)
        deltas = rng.standard_normal((1000, 4, 4))
        deltas *= rng.uniform(0, 0.1, size=(1000, 1, 1)) / np.linalg.norm(deltas, axis=(1, 2), keepdims=True)
        for d in deltas:
            assert best <= prox_objective(z + d, a, tau) + 1e-8


@given(st.integers(0, 2**32 - 1), st.integers(1, 7), st.integers(1, 7), st.floats(0.01, 3.0))
def test_singular_value_mapping(seed, m, n, tau):
    a = np.random.default_rng(seed).standard_normal((m, n))
    got = np.linalg.svd(matrix_shrink(a, tau), compute_uv=False)
    want = np.maximum(np.linalg.svd(a, compute_uv=False) - tau, 0)
    np.testing.assert_allclose(got, want, atol=1e-9)
    assert np.linalg.matrix_rank(matrix_shrink(a, tau)) <= np.count_nonzero(want)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 3.0))
def test_nonexpansive(seed, tau):
    g = np.random.default_rng(seed)
    a, b = g.standard_normal((2, 5, 6))
    assert np.linalg.norm(matrix_shrink(a, tau) - matrix_shrink(b, tau)) <= np.linalg.norm(a - b) + 1e-9


def test_repeated_singular_values_give_one_answer(rng):
    q1, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    q2, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    a = q1 @ np.diag([2.0, 2.0, 2.0, 1.0, 0.0]) @ q2.T
    want = q1 @ np.diag([1.5, 1.5, 1.5, 0.5, 0.0]) @ q2.T
    np.testing.assert_allclose(matrix_shrink(a, 0.5), want, atol=1e-12)


def test_numerical_rank_cutoff():
    assert numerical_rank([1.0, 1e-12, 1e-14]) == 2
    assert numerical_rank([0.0, 0.0]) == 0
