"""Reference predictors: unconstrained fits, SEO, and an exact LP over candidates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import HALF_SQUARE, Dataset, LinearModel, LossSpec, RandomizedPredictor
from .learners import fit_weighted_least_squares, fit_weighted_logistic
from .moments import DiscretizedProblem, sp_statistics
from .simplex import linprog

MAX_CANDIDATES = 50


def risk_learner(spec: LossSpec):
    """Weighted risk minimiser ``(X, y, w) -> LinearModel`` matching ``spec``."""
    if spec.kind == HALF_SQUARE:
        return lambda X, y, w=None: fit_weighted_least_squares(X, y, w)
    return lambda X, y, w=None: fit_weighted_logistic(X, y, w, spec=spec)


def fit_unconstrained(dataset: Dataset, spec: LossSpec) -> LinearModel:
    return risk_learner(spec)(dataset.X, dataset.y)


def centered_group_indicators(groups, group_count: int) -> np.ndarray:
    """Columns ``1{A=a} - P[A=a]`` for ``a = 1..|A|-1``."""
    onehot = (np.asarray(groups)[:, None] == np.arange(group_count)[None, :]).astype(float)
    return (onehot - onehot.mean(axis=0))[:, 1:]


def fit_seo(dataset: Dataset) -> LinearModel:
    """Least squares subject to zero empirical correlation with every group indicator.

    Solves the KKT system of ``min |D theta - y|^2`` s.t. ``G^T D theta = 0``
    where ``D = [X, 1]`` and ``G`` holds the centered group indicators. The
    returned model clips to ``[0, 1]``; ``decision_function`` gives the
    unclipped scores the constraint is stated on. Singular systems (duplicate
    features, constraints that are already inactive) are solved by minimum-norm
    least squares.
    """
    if dataset.group_count < 2:
        raise ValueError("SEO needs at least two groups")
    X, y = dataset.X, dataset.y
    n, d = X.shape
    D = np.hstack([X, np.ones((n, 1))])
    G = centered_group_indicators(dataset.groups, dataset.group_count)
    M = G.T @ D
    k = M.shape[0]
    K = np.zeros((d + 1 + k, d + 1 + k))
    K[: d + 1, : d + 1] = D.T @ D
    K[: d + 1, d + 1:] = M.T
    K[d + 1:, : d + 1] = M
    rhs = np.concatenate([D.T @ y, np.zeros(k)])
    # the system is always consistent, so the minimum-norm solution is an exact
    # KKT point even when the design or the constraints are rank deficient
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    theta = sol[: d + 1]
    return LinearModel(theta[:d], theta[d])


def seo_correlations(dataset: Dataset, model: LinearModel) -> np.ndarray:
    """``sum_i (g_i - mean g) * score_i / n`` for every group indicator (pre-clip scores)."""
    s = model.decision_function(dataset.X)
    onehot = (dataset.groups[:, None] == np.arange(dataset.group_count)[None, :]).astype(float)
    return (onehot - onehot.mean(axis=0)).T @ s / dataset.n


@dataclass
class ExactSolution:
    feasible: bool
    weights: np.ndarray | None
    value: float | None
    q: RandomizedPredictor | None


def solve_sp_exact(problem: DiscretizedProblem, candidates, eps_hat) -> ExactSolution:
    """Minimise ``cost(Q)`` over distributions on ``candidates`` s.t. ``|gamma_{a,z}(Q)| <= eps_a``."""
    candidates = list(candidates)
    if not 1 <= len(candidates) <= MAX_CANDIDATES:
        raise ValueError(f"need between 1 and {MAX_CANDIDATES} candidates")
    stats = [sp_statistics(problem, f) for f in candidates]
    cost = np.array([c for c, _ in stats])
    G = np.stack([g.reshape(-1) for _, g in stats], axis=1)  # (|A| N, K)
    eps = np.broadcast_to(np.asarray(eps_hat, dtype=float), (problem.n_groups,))
    e = np.repeat(eps, problem.N)
    K = len(candidates)
    res = linprog(cost, np.vstack([G, -G]), np.concatenate([e, e]), np.ones((1, K)), [1.0])
    if res.status == "infeasible":
        return ExactSolution(False, None, None, None)
    if not res.success:
        raise RuntimeError(f"LP solve failed: {res.status}")
    w = np.maximum(res.x, 0.0)
    w = w / w.sum()
    q = RandomizedPredictor(tuple((float(wi), f) for wi, f in zip(w, candidates) if wi > 0))
    return ExactSolution(True, w, float(cost @ w), q)
