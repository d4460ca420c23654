import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stair.regression import (
    Estimator,
    RegressionError,
    ScatterScorer,
    fit_least_squares,
    intercept_only_mspe,
    mspe_sum,
    predict,
)


def test_exact_linear_fit():
    est = fit_least_squares([[1], [2], [3]], [[2], [4], [6]])
    np.testing.assert_allclose(est.beta[:, 0], [0, 2], atol=1e-9)
    assert np.max(np.abs(predict(est, [[1], [2], [3]]) - [[2], [4], [6]])) < 1e-9
    assert not est.regularized


def test_two_point_fit():
    # normal equations [[2, 3], [3, 5]] b = [4, 7] give b = [-1, 2]
    est = fit_least_squares([[1], [2]], [[1], [3]])
    np.testing.assert_allclose(est.beta[:, 0], [-1, 2], atol=1e-12)


def test_duplicate_columns_trigger_ridge():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((30, 1))
    est = fit_least_squares(np.hstack([x, x]), 3 * x + 1)
    assert est.regularized
    assert np.all(np.isfinite(est.beta))
    assert np.max(np.abs(predict(est, np.hstack([x, x])) - (3 * x + 1))) < 1e-5


def test_fit_errors():
    with pytest.raises(RegressionError):
        fit_least_squares(np.zeros((0, 1)), np.zeros((0, 1)))
    with pytest.raises(RegressionError):
        fit_least_squares([[1.0], [np.nan]], [[1.0], [2.0]])
    with pytest.raises(RegressionError):
        fit_least_squares([[1.0], [2.0]], [[1.0]])


def test_predict_cases():
    zero = Estimator(np.zeros((2, 3)))
    np.testing.assert_array_equal(predict(zero, [[1.0], [5.0]]), np.zeros((2, 3)))
    ident = Estimator(np.array([[0.0], [1.0]]))
    X = np.array([[1.5], [-2.0], [7.0]])
    np.testing.assert_array_equal(predict(ident, X), X)
    with pytest.raises(RegressionError):
        predict(ident, np.zeros((3, 2)))


def test_mspe_sum_examples():
    assert mspe_sum([[1.0], [2.0]], [[1.0], [2.0]]) == 0
    assert mspe_sum([[0.0], [0.0]], [[1.0], [3.0]]) == 5
    # columns with per-variable MSPE 5 and 7
    pred = np.zeros((2, 2))
    obs = np.array([[1.0, 1.0], [3.0, np.sqrt(13.0)]])
    assert mspe_sum(pred, obs) == pytest.approx(12)
    with pytest.raises(RegressionError):
        mspe_sum(np.zeros((2, 1)), np.zeros((3, 1)))


def test_estimator_rejects_overlap():
    with pytest.raises(RegressionError):
        Estimator(np.zeros((2, 1)), [(1, 0)], [(1, 0)])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(5, 40), p=st.integers(1, 4), q=st.integers(1, 4))
def test_least_squares_beats_zero_estimator(seed, n, p, q):
    rng = np.random.default_rng(seed)
    X, Y = rng.standard_normal((n, p)), rng.standard_normal((n, q)) + 5
    est = fit_least_squares(X, Y)
    assert mspe_sum(predict(est, X), Y) <= mspe_sum(np.zeros_like(Y), Y) + 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), q=st.integers(2, 6))
def test_mspe_sum_permutation_invariant(seed, q):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((7, q)), rng.standard_normal((7, q))
    perm = rng.permutation(q)
    assert mspe_sum(a[:, perm], b[:, perm]) == pytest.approx(mspe_sum(a, b), rel=1e-12)


def test_scatter_scorer_matches_direct_fits():
    rng = np.random.default_rng(4)
    data = rng.standard_normal((60, 8)) @ rng.standard_normal((8, 8))
    scorer = ScatterScorer(data)
    assert scorer.base == pytest.approx(intercept_only_mspe(data))
    chosen = [2, 5, 0]
    rest = [c for c in range(8) if c not in chosen]
    est = fit_least_squares(data[:, chosen], data[:, rest])
    direct = mspe_sum(predict(est, data[:, chosen]), data[:, rest])
    assert scorer.error(chosen) == pytest.approx(direct, rel=1e-10)

    R = scorer.residual(chosen[:2])
    gains = scorer.gains(R)
    assert np.trace(R) - gains[0] == pytest.approx(direct, rel=1e-10)
