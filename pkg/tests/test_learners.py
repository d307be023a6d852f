import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairreg.core import LossSpec
from fairreg.learners import (
    fit_threshold_classifier, fit_weighted_least_squares, fit_weighted_logistic, hinge_lp,
    hinge_objective, logistic_objective,
)

SL = LossSpec.scaled_logistic()


class TestLeastSquares:
    def test_two_point_interpolation(self):
        m = fit_weighted_least_squares([[0.0], [1.0]], [0.2, 0.7])
        assert m.weights[0] == pytest.approx(0.5, abs=1e-10)
        assert m.intercept == pytest.approx(0.2, abs=1e-10)

    def test_noiseless_recovery(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(50, 3))
        w = np.array([0.1, -0.2, 0.05])
        m = fit_weighted_least_squares(X, X @ w + 0.4)
        assert np.max(np.abs(m.weights - w)) <= 1e-10
        assert abs(m.intercept - 0.4) <= 1e-10

    def test_weights_mean_replication(self):
        rng = np.random.default_rng(1)
        X, y = rng.normal(size=(10, 2)), rng.uniform(size=10)
        w = np.ones(10)
        w[0] = 2.0
        a = fit_weighted_least_squares(X, y, w)
        b = fit_weighted_least_squares(np.vstack([X, X[:1]]), np.append(y, y[0]))
        assert np.allclose(a.weights, b.weights, atol=1e-12) and a.intercept == pytest.approx(b.intercept)

    @given(st.integers(0, 1000), st.floats(0.0, 1.0))
    def test_first_order_optimality(self, seed, ridge):
        rng = np.random.default_rng(seed)
        X, y, W = rng.normal(size=(40, 3)), rng.uniform(size=40), rng.uniform(0.1, 2, 40)
        m = fit_weighted_least_squares(X, y, W, ridge=ridge)
        r = y - m.decision_function(X)
        assert np.max(np.abs(-(X.T @ (W * r)) + ridge * m.weights)) <= 1e-8
        assert abs((W * r).sum()) <= 1e-8

    def test_rank_deficient_gets_jitter(self):
        X = np.ones((5, 2))
        m = fit_weighted_least_squares(X, np.full(5, 0.3))
        assert np.all(np.isfinite(m.weights))
        assert m.predict(X) == pytest.approx(np.full(5, 0.3), abs=1e-6)

    def test_zero_weights_rejected(self):
        with pytest.raises(ValueError):
            fit_weighted_least_squares([[0.0], [1.0]], [0, 1], [0, 0])
        with pytest.raises(ValueError):
            fit_weighted_least_squares([[0.0], [1.0]], [0, 1], [1, -1])


class TestLogistic:
    def test_separable_1d_against_grid_search(self):
        X = np.array([[-1.0], [-0.5], [0.5], [1.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        m = fit_weighted_logistic(X, y, spec=SL, reg=1e-2)
        best = min(
            logistic_objective(X, y, np.ones(4), np.array([w]), 0.5, SL, 1e-2)[0]
            for w in np.linspace(0, 10, 20001)
        )
        val = logistic_objective(X, y, np.ones(4), m.weights, m.intercept, SL, 1e-2)[0]
        assert val <= best + 1e-4

    def test_zero_weights_equal_deletion(self):
        rng = np.random.default_rng(2)
        X, y = rng.normal(size=(30, 2)), rng.uniform(size=30)
        W = np.r_[np.ones(15), np.zeros(15)]
        a = fit_weighted_logistic(X, y, W, spec=SL)
        b = fit_weighted_logistic(X[:15], y[:15], spec=SL)
        assert np.allclose(a.weights, b.weights, atol=1e-6) and a.intercept == pytest.approx(b.intercept, abs=1e-6)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        X, y, W = rng.normal(size=(25, 2)), rng.uniform(size=25), rng.uniform(size=25)
        w, b, h = rng.normal(size=2), 0.3, 1e-6
        _, gw, gb = logistic_objective(X, y, W, w, b, SL, 0.1)
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            fd = (logistic_objective(X, y, W, w + e, b, SL, 0.1)[0]
                  - logistic_objective(X, y, W, w - e, b, SL, 0.1)[0]) / (2 * h)
            assert gw[k] == pytest.approx(fd, abs=1e-5)
        fd = (logistic_objective(X, y, W, w, b + h, SL, 0.1)[0]
              - logistic_objective(X, y, W, w, b - h, SL, 0.1)[0]) / (2 * h)
        assert gb == pytest.approx(fd, abs=1e-5)

    def test_stationary_at_return(self):
        rng = np.random.default_rng(4)
        X, y = rng.normal(size=(60, 3)), rng.uniform(size=60)
        m = fit_weighted_logistic(X, y, spec=SL, tol=1e-8)
        _, gw, gb = logistic_objective(X, y, np.ones(60), m.weights, m.intercept, SL, 1e-4)
        assert max(np.abs(gw).max(), abs(gb)) <= 1e-8

    def test_iteration_cap_warns(self):
        rng = np.random.default_rng(5)
        X, y = rng.normal(size=(30, 2)), rng.uniform(size=30)
        with warnings.catch_warnings(record=True) as rec:
            warnings.simplefilter("always")
            fit_weighted_logistic(X, y, spec=SL, max_iter=2, tol=1e-14)
        assert any("max_iter" in str(r.message) for r in rec)


class TestThresholdClassifier:
    def test_feasible_margin_reaches_zero(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(size=(40, 2))
        z = np.full(40, 0.2)
        labels = np.ones(40)
        beta = fit_threshold_classifier(X, z, labels, np.ones(40), margin=0.05)
        assert hinge_objective(beta, X, z, labels, np.ones(40), 0.05) == 0.0
        assert np.max(np.abs(beta)) <= 1.0

    def test_within_two_percent_of_exact_lp(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            X = rng.normal(size=(200, 2))
            z = rng.choice([0.25, 0.5, 0.75, 1.0], size=200)
            labels = (X @ [0.3, -0.2] + 0.5 + 0.2 * rng.normal(size=200) >= z).astype(float)
            W = rng.uniform(size=200)
            beta = fit_threshold_classifier(X, z, labels, W, margin=0.125)
            _, exact = hinge_lp(X, z, labels, W, margin=0.125)
            approx = hinge_objective(beta, X, z, labels, W, 0.125)
            assert approx <= exact * 1.02 + 1e-12
            assert np.max(np.abs(beta)) <= 1.0
