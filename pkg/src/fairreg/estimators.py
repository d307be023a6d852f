"""scikit-learn style wrappers around the fair regression solvers."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .baselines import fit_seo
from .bgl_solver import BGLConfig, run_bgl
from .core import HALF_SQUARE, SCALED_LOGISTIC, Dataset, LossSpec, RandomizedPredictor
from .moments import DiscretizedProblem
from .oracles import make_oracle
from .sp_solver import SPConfig, run_sp


class InfeasibleError(RuntimeError):
    """Raised when predicting with a model whose loss bounds were found infeasible."""


def _loss_spec(loss: str, C: float) -> LossSpec:
    if loss == HALF_SQUARE:
        return LossSpec.half_square()
    if loss == SCALED_LOGISTIC:
        return LossSpec.scaled_logistic(C)
    raise ValueError(f"unknown loss {loss!r}; expected {HALF_SQUARE!r} or {SCALED_LOGISTIC!r}")


def _validate(X, y, sensitive_features):
    X, y = check_X_y(X, y, y_numeric=True)
    if sensitive_features is None:
        raise ValueError("sensitive_features is required")
    s = np.asarray(sensitive_features).reshape(-1)
    if s.shape[0] != X.shape[0]:
        raise ValueError("sensitive_features length does not match X")
    classes, groups = np.unique(s, return_inverse=True)
    return Dataset(X, groups, y, len(classes)), classes


class _RandomizedRegressorMixin:
    def _q(self) -> RandomizedPredictor:
        check_is_fitted(self, "q_")
        if self.q_ is None:
            raise InfeasibleError("the loss bounds were found infeasible; there is no model")
        return self.q_

    def predict(self, X):
        """Randomised prediction: each row is scored by an atom drawn from the fitted distribution."""
        q = self._q()
        X = check_array(X)
        return q.predict(X, random_state=self.random_state)

    def predict_mean(self, X):
        """Expected prediction under the fitted distribution."""
        q = self._q()
        return q.predict_mean(check_array(X))


class FairRegressorSP(_RandomizedRegressorMixin, RegressorMixin, BaseEstimator):
    """Regression under a statistical parity constraint.

    Labels must lie in ``[0, 1]``. ``eps`` bounds, at every grid threshold,
    the gap between each group's prediction CDF and the overall one.
    """

    def __init__(self, eps=0.05, B=10.0, nu=1e-3, N=40, max_iters=5000, oracle="ls",
                 loss=HALF_SQUARE, C=5.0, slack_constant=0.0, history_every=100, random_state=None):
        self.eps = eps
        self.B = B
        self.nu = nu
        self.N = N
        self.max_iters = max_iters
        self.oracle = oracle
        self.loss = loss
        self.C = C
        self.slack_constant = slack_constant
        self.history_every = history_every
        self.random_state = random_state

    def fit(self, X, y, sensitive_features=None):
        data, self.groups_ = _validate(X, y, sensitive_features)
        spec = _loss_spec(self.loss, self.C)
        cfg = SPConfig(eps_hat=self.eps, B=self.B, nu=self.nu, N=self.N, max_iters=self.max_iters,
                       oracle_kind=self.oracle, slack_constant=self.slack_constant,
                       history_every=self.history_every)
        problem = DiscretizedProblem.build(data, spec, cfg.N)
        self.result_ = run_sp(problem, cfg, make_oracle(self.oracle, problem))
        self.q_ = self.result_.q_hat
        self.n_features_in_ = data.n_features
        self.converged_ = self.result_.converged
        return self


class FairRegressorBGL(_RandomizedRegressorMixin, RegressorMixin, BaseEstimator):
    """Regression with every group's average loss bounded by ``zeta``.

    If the bounds turn out infeasible ``q_`` is ``None``, ``infeasible_`` is
    set and :meth:`predict` raises :class:`InfeasibleError`.
    """

    def __init__(self, zeta=1.0, B=10.0, nu=1e-3, max_iters=5000, loss=HALF_SQUARE, C=5.0,
                 slack_constant=0.0, history_every=100, random_state=None):
        self.zeta = zeta
        self.B = B
        self.nu = nu
        self.max_iters = max_iters
        self.loss = loss
        self.C = C
        self.slack_constant = slack_constant
        self.history_every = history_every
        self.random_state = random_state

    def fit(self, X, y, sensitive_features=None):
        data, self.groups_ = _validate(X, y, sensitive_features)
        cfg = BGLConfig(zeta_hat=self.zeta, B=self.B, nu=self.nu, max_iters=self.max_iters,
                        loss=_loss_spec(self.loss, self.C), slack_constant=self.slack_constant,
                        history_every=self.history_every)
        self.result_ = run_bgl(data, cfg)
        self.q_ = self.result_.q_hat
        self.infeasible_ = self.result_.infeasible
        self.converged_ = self.result_.converged
        self.n_features_in_ = data.n_features
        return self


class SEORegressor(RegressorMixin, BaseEstimator):
    """Least squares with predictions uncorrelated with every group indicator."""

    def fit(self, X, y, sensitive_features=None):
        data, self.groups_ = _validate(X, y, sensitive_features)
        self.model_ = fit_seo(data)
        self.coef_ = np.array(self.model_.weights)
        self.intercept_ = self.model_.intercept
        self.n_features_in_ = data.n_features
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return self.model_.decision_function(check_array(X))

    def predict(self, X):
        """Scores clipped to ``[0, 1]``."""
        return np.clip(self.decision_function(X), 0.0, 1.0)
