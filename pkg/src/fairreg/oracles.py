"""Best responses of the predictor player for statistical parity.

Given signed multipliers ``lam[a, j] = lam_plus - lam_minus`` each oracle looks
for a predictor ``f`` minimising

    cost(h_f) + sum_{a,z} lam[a, z] * gamma_{a,z}(h_f),

which equals the mean over examples of ``(1/N) sum_z c_lam(y, a, z) 1{f(x) >= z}``.

* :class:`CSOracle` materialises the ``n * N`` cost-sensitive instances and
  trains a threshold classifier on the weighted hinge surrogate.
* :class:`LSOracle` replaces the per-example staircase ``g_lam`` by a square
  loss around its minimiser ``U_i`` and calls weighted least squares.
* :class:`MatchedLossOracle` does the same with two pseudo-labelled rows per
  example, weighted so the loss derivative vanishes at ``U_i``.
* :class:`CandidateOracle` is the exact best response over a finite set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import HALF_SQUARE, LinearModel, LossSpec
from .learners import (
    HINGE_MARGIN_FACTOR,
    fit_threshold_classifier,
    fit_weighted_least_squares,
    fit_weighted_logistic,
)
from .moments import DiscretizedProblem, sp_statistics

logger = logging.getLogger(__name__)


def net_lambda(lam_plus, lam_minus) -> np.ndarray:
    return np.asarray(lam_plus, dtype=float) - np.asarray(lam_minus, dtype=float)


def c_lambda(c: float, lambda_net, a: int, j: int, p, N: int) -> float:
    """Cost of predicting ``1`` at threshold index ``j`` (0-based) for group ``a``."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ValueError("group frequencies must be positive")
    lam = np.asarray(lambda_net, dtype=float)
    return float(c + N * lam[a, j] / p[a] - N * lam[:, j].sum())


def c_lambda_table(problem: DiscretizedProblem, lambda_net) -> np.ndarray:
    """``c_lam(y, a, z)`` for every cover point, group and grid index: ``(|Y~|, |A|, N)``."""
    lam = np.asarray(lambda_net, dtype=float)
    p = problem.dataset.group_freqs
    N = problem.N
    shift = N * lam / p[:, None] - N * lam.sum(axis=0)[None, :]
    return problem.costs[:, None, :] + shift[None, :, :]


@dataclass(frozen=True, eq=False)
class GLambdaTable:
    """Prefix sums ``g[k, a, j] = sum_{j' <= j} c_lam(cover_k, a, z_j') / N``; ``j = 0`` is empty."""

    values: np.ndarray

    def __call__(self, k, a, u, grid):
        return self.values[k, a, grid.floor_index(u)]


def build_g_lambda(problem: DiscretizedProblem, lambda_net) -> GLambdaTable:
    c = c_lambda_table(problem, lambda_net)
    K, A, N = c.shape
    g = np.zeros((K, A, N + 1))
    np.cumsum(c / N, axis=2, out=g[:, :, 1:])
    return GLambdaTable(g)


TIE_TOL = 1e-12


def target_index_table(g: GLambdaTable) -> np.ndarray:
    """Largest grid index attaining the minimum prefix sum, per ``(cover point, group)``."""
    v = g.values
    m = v.min(axis=2, keepdims=True)
    hit = v <= m + TIE_TOL
    N1 = v.shape[2]
    return N1 - 1 - np.argmax(hit[:, :, ::-1], axis=2)


def ls_targets(g: GLambdaTable, problem: DiscretizedProblem) -> np.ndarray:
    """Per-example regression targets ``U_i`` in ``{0} + Z``."""
    jt = target_index_table(g)
    j = jt[problem.label_index, problem.dataset.groups]
    return problem.grid.value(j)


def cs_instances(problem: DiscretizedProblem, lambda_net):
    """The ``n * N`` cost-sensitive instances ``((x_i, z), C_iz)``.

    Returns ``(row_index, z, cost)`` with rows ordered example-major.
    """
    c = c_lambda_table(problem, lambda_net)
    n, N = problem.dataset.n, problem.N
    per = c[problem.label_index, problem.dataset.groups]  # (n, N)
    rows = np.repeat(np.arange(n), N)
    z = np.tile(problem.grid.points, n)
    return rows, z, per.reshape(-1)


def to_weighted_binary(cost):
    """``C -> (W = |C|, Y' = 1{C <= 0})``."""
    cost = np.asarray(cost, dtype=float)
    return np.abs(cost), (cost <= 0).astype(float)


def best_h_cs(problem: DiscretizedProblem, lambda_net, n_iter: int = 2000) -> LinearModel:
    rows, z, cost = cs_instances(problem, lambda_net)
    W, Y = to_weighted_binary(cost)
    margin = HINGE_MARGIN_FACTOR * problem.grid.alpha
    beta = fit_threshold_classifier(problem.dataset.X[rows], z, Y, W, margin, n_iter=n_iter)
    return LinearModel(beta[:-1], beta[-1])


def best_h_ls(problem: DiscretizedProblem, lambda_net) -> LinearModel:
    U = ls_targets(build_g_lambda(problem, lambda_net), problem)
    return fit_weighted_least_squares(problem.dataset.X, U)


def matched_rows(spec: LossSpec, U, rule: str = "target"):
    """Pseudo-labels ``(0, 1)`` and weights ``(W1, W2)`` with ``W1 + W2 = 1``.

    ``rule="target"`` takes ``W2 = U`` for both shipped losses; for the half
    square loss this is also the exact derivative-nulling choice.
    ``rule="nulling"`` solves ``W1 l'(0, U) + W2 l'(1, U) = 0`` from the loss
    subderivatives, which for the scaled logistic loss gives
    ``W2 = sigmoid(C (2U - 1))``.
    """
    U = np.asarray(U, dtype=float)
    if rule == "target" or spec.kind == HALF_SQUARE:
        W2 = U.copy()
    elif rule == "nulling":
        d1 = spec.raw_derivative(0.0, U)
        d2 = spec.raw_derivative(1.0, U)
        ok = (d1 >= 0) & (d2 <= 0) & (d1 - d2 > 0)
        W2 = np.where(ok, d1 / np.where(ok, d1 - d2, 1.0), np.round(U))
        if not np.all(ok):
            logger.warning("no gradient-sign pair for %d target(s); using nearest label", int((~ok).sum()))
    else:
        raise ValueError(f"unknown weight rule {rule!r}")
    return np.zeros_like(U), np.ones_like(U), 1.0 - W2, W2


def best_h_matched(problem: DiscretizedProblem, lambda_net, rule: str = "target", init=None) -> LinearModel:
    U = ls_targets(build_g_lambda(problem, lambda_net), problem)
    y1, y2, W1, W2 = matched_rows(problem.spec, U, rule)
    X = problem.dataset.X
    X2 = np.vstack([X, X])
    y = np.concatenate([y1, y2])
    w = np.concatenate([W1, W2])
    if problem.spec.kind == HALF_SQUARE:
        return fit_weighted_least_squares(X2, y, w)
    return fit_weighted_logistic(X2, y, w, spec=problem.spec, init=init)


class CSOracle:
    kind = "cs"

    def __init__(self, problem: DiscretizedProblem, n_iter: int = 2000):
        self.problem = problem
        self.n_iter = n_iter

    def __call__(self, lambda_net):
        return best_h_cs(self.problem, lambda_net, self.n_iter)


class LSOracle:
    kind = "ls"

    def __init__(self, problem: DiscretizedProblem):
        self.problem = problem

    def __call__(self, lambda_net):
        return best_h_ls(self.problem, lambda_net)


class MatchedLossOracle:
    kind = "matched"

    def __init__(self, problem: DiscretizedProblem, rule: str = "target"):
        self.problem = problem
        self.rule = rule
        self._last = None

    def __call__(self, lambda_net):
        f = best_h_matched(self.problem, lambda_net, self.rule, init=self._last)
        self._last = (f.weights, f.intercept)
        return f


class CandidateOracle:
    """Exact best response over a fixed finite list of predictors (lowest index wins ties)."""

    kind = "candidates"

    def __init__(self, problem: DiscretizedProblem, candidates):
        self.problem = problem
        self.candidates = list(candidates)
        stats = [sp_statistics(problem, f) for f in self.candidates]
        self.costs = np.array([c for c, _ in stats])
        self.moments = np.stack([g for _, g in stats])
        self._flat = self.moments.reshape(len(self.candidates), -1)

    def objectives(self, lambda_net) -> np.ndarray:
        return self.costs + self._flat @ np.asarray(lambda_net, dtype=float).reshape(-1)

    def __call__(self, lambda_net):
        return self.candidates[int(np.argmin(self.objectives(lambda_net)))]


ORACLES = {"cs": CSOracle, "ls": LSOracle, "matched": MatchedLossOracle}


def make_oracle(kind: str, problem: DiscretizedProblem, **kwargs):
    try:
        cls = ORACLES[kind]
    except KeyError:
        raise ValueError(f"unknown oracle kind {kind!r}; expected one of {sorted(ORACLES)}") from None
    return cls(problem, **kwargs)
