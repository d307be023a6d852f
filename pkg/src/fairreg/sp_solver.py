"""Exponentiated-gradient saddle-point solver for statistical parity."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import RandomizedPredictor
from .moments import DiscretizedProblem, sp_statistics


@dataclass
class SPConfig:
    """Solver settings.

    ``eps_hat`` is a scalar or one slack per group. ``slack_constant`` adds
    ``slack_constant / sqrt(n_a)`` to each group's slack. ``history_every``
    thins the per-iteration trace (``0`` keeps only the final record).
    """

    eps_hat: float | list = 0.05
    B: float = 10.0
    nu: float = 1e-3
    N: int = 40
    max_iters: int = 5000
    oracle_kind: str = "ls"
    slack_constant: float = 0.0
    history_every: int = 1

    def __post_init__(self):
        if not self.B > 0:
            raise ValueError("B must be positive")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if int(self.N) < 1:
            raise ValueError("N must be at least 1")
        eps = np.atleast_1d(np.asarray(self.eps_hat, dtype=float))
        if np.any(eps < 0) or np.any(eps > 1):
            raise ValueError("slacks must lie in [0, 1]")

    def slacks(self, group_sizes) -> np.ndarray:
        sizes = np.asarray(group_sizes, dtype=float)
        eps = np.broadcast_to(np.asarray(self.eps_hat, dtype=float), sizes.shape).astype(float)
        return eps + self.slack_constant / np.sqrt(sizes)

    @property
    def learning_rate(self) -> float:
        return self.nu / (8.0 * self.B)

    def to_dict(self) -> dict:
        eps = self.eps_hat
        return {
            "eps_hat": list(map(float, eps)) if np.ndim(eps) else float(eps),
            "B": float(self.B), "nu": float(self.nu), "N": int(self.N),
            "max_iters": int(self.max_iters), "oracle_kind": self.oracle_kind,
            "slack_constant": float(self.slack_constant),
            "history_every": int(self.history_every),
        }


def iteration_bound(B: float, nu: float, n_groups: int, N: int) -> float:
    return 16.0 * B * B * math.log(2 * n_groups * N + 1) / (nu * nu)


def lambda_from_theta(theta_plus, theta_minus, B: float):
    """Softmax map with an extra unit slack coordinate, scaled to total mass ``< B``."""
    tp = np.asarray(theta_plus, dtype=float)
    tm = np.asarray(theta_minus, dtype=float)
    M = max(0.0, float(tp.max(initial=0.0)), float(tm.max(initial=0.0)))
    ep = np.exp(tp - M)
    em = np.exp(tm - M)
    denom = math.exp(-M) + ep.sum() + em.sum()
    return B * ep / denom, B * em / denom


@dataclass
class DualStateSP:
    theta_plus: np.ndarray
    theta_minus: np.ndarray
    budget: float

    @classmethod
    def zeros(cls, n_groups: int, N: int, budget: float) -> "DualStateSP":
        return cls(np.zeros((n_groups, N)), np.zeros((n_groups, N)), budget)

    @property
    def lam(self):
        return lambda_from_theta(self.theta_plus, self.theta_minus, self.budget)


def _eps_col(eps_hat, shape):
    e = np.asarray(eps_hat, dtype=float)
    return np.broadcast_to(e.reshape(-1, 1) if e.ndim == 1 else e, shape)


def lagrangian_sp(cost: float, moments, lam_plus, lam_minus, eps_hat) -> float:
    g = np.asarray(moments, dtype=float)
    e = _eps_col(eps_hat, g.shape)
    return float(cost + np.sum(lam_plus * (g - e)) + np.sum(lam_minus * (-g - e)))


def best_lambda_sp(moments, eps_hat, B: float):
    """All mass on the most violated constraint, or nothing if none is violated."""
    g = np.asarray(moments, dtype=float)
    viol = np.abs(g) - _eps_col(eps_hat, g.shape)
    lp = np.zeros_like(g)
    lm = np.zeros_like(g)
    k = int(np.argmax(viol))
    a, j = np.unravel_index(k, g.shape)
    if viol[a, j] > 0:
        if g[a, j] > 0:
            lp[a, j] = B
        else:
            lm[a, j] = B
    return lp, lm


def exp_grad_step(theta_plus, theta_minus, moments, eps_hat, eta: float):
    g = np.asarray(moments, dtype=float)
    e = _eps_col(eps_hat, g.shape)
    return theta_plus + eta * g - eta * e, theta_minus - eta * g - eta * e


@dataclass
class SPResult:
    q_hat: RandomizedPredictor
    lambda_bar: tuple
    nu_bar: float
    nu_under: float
    nu_under_raw: float
    iterations: int
    converged: bool
    cost: float
    moments: np.ndarray
    eps_hat: np.ndarray
    history: list = field(default_factory=list, repr=False)

    @property
    def gaps(self):
        return self.nu_bar, self.nu_under

    @property
    def max_violation(self) -> float:
        return float(np.max(np.abs(self.moments) - self.eps_hat[:, None]))

    def history_jsonl(self, **extra) -> str:
        return "".join(json.dumps({**extra, **rec}) + "\n" for rec in self.history)


class _StatsCache:
    """Cost and moments per distinct predictor; identity lookups skip hashing."""

    def __init__(self, problem):
        self.problem = problem
        self._cache = {}
        self._by_id = {}

    def __call__(self, h):
        hit = self._by_id.get(id(h))
        if hit is not None and hit[0] is h:
            return hit[1], hit[2]
        key = h.key() if hasattr(h, "key") else id(h)
        stats = self._cache.get(key)
        if stats is None:
            c, g = sp_statistics(self.problem, h)
            stats = (float(c), np.asarray(g, dtype=float).reshape(-1))
            self._cache[key] = stats
            # the first object seen per key is kept alive as an atom, so its id is stable
            self._by_id[id(h)] = (h, key, stats)
        return key, stats


def run_sp(problem: DiscretizedProblem, config: SPConfig, oracle) -> SPResult:
    """Run the saddle-point iteration until both gaps are at most ``nu``.

    The returned ``q_hat`` is uniform over the best responses played so far
    (repeated predictors merged). If ``max_iters`` runs out first the current
    average is returned with ``converged=False``. The lower gap needs an extra
    oracle call, so it is only evaluated when the upper gap already passes or
    a history record is due.
    """
    if problem.N != config.N:
        raise ValueError("problem grid size does not match config.N")
    ds = problem.dataset
    A, N, B = ds.group_count, problem.N, float(config.B)
    eps = config.slacks(ds.group_sizes)
    e = np.repeat(eps, N)
    eta = config.learning_rate
    every = int(config.history_every)
    stats = _StatsCache(problem)

    # dual state stacked as [theta_plus, theta_minus], each flattened group-major
    K = A * N
    ee = np.concatenate([e, e])
    theta = np.zeros(2 * K)
    lam_sum = np.zeros(2 * K)
    sg_sum = np.zeros(2 * K)  # running sum of [gamma, -gamma]
    cost_sum = 0.0
    counts: dict = {}
    atoms: dict = {}
    steps: dict = {}
    history = []
    converged = False
    nu_bar = nu_under = nu_raw = math.inf

    def lower_gap(L_bar, D, t):
        lam_bar = lam_sum / t
        _, (c2, g2) = stats(oracle((lam_bar[:K] - lam_bar[K:]).reshape(A, N)))
        raw = L_bar - (c2 + float(lam_bar @ (np.concatenate([g2, -g2]) - ee)))
        return raw, max(raw, 0.0)

    t = 0
    for t in range(1, config.max_iters + 1):
        M = max(0.0, theta.max())
        ex = np.exp(theta - M)
        lam = ex * (B / (math.exp(-M) + ex.sum()))
        h = oracle((lam[:K] - lam[K:]).reshape(A, N))
        key, (c_h, g_h) = stats(h)
        if key in counts:
            counts[key] += 1
            sg, step = steps[key]
        else:
            counts[key] = 1
            atoms[key] = h
            sg = np.concatenate([g_h, -g_h])
            step = eta * (sg - ee)
            steps[key] = sg, step

        cost_sum += c_h
        sg_sum += sg
        lam_sum += lam

        D = sg_sum / t - ee  # signed constraint values of the running average
        viol = float(D.max())
        penalty = float(lam_sum @ D) / t
        L_bar = cost_sum / t + penalty
        nu_bar = B * max(viol, 0.0) - penalty
        record = every > 0 and (t == 1 or t % every == 0)
        if nu_bar <= config.nu or record:
            nu_raw, nu_under = lower_gap(L_bar, D, t)
        else:
            nu_raw = nu_under = math.nan
        if record:
            history.append({
                "iteration": t, "lagrangian": L_bar, "max_violation": viol,
                "nu_bar": nu_bar, "nu_under": nu_under, "nu_under_raw": nu_raw,
            })
        if nu_bar <= config.nu and nu_under <= config.nu:
            converged = True
            break
        theta += step

    if math.isnan(nu_raw):
        nu_raw, nu_under = lower_gap(L_bar, D, t)
    if every > 0 and (not history or history[-1]["iteration"] != t):
        history.append({
            "iteration": t, "lagrangian": L_bar, "max_violation": viol,
            "nu_bar": nu_bar, "nu_under": nu_under, "nu_under_raw": nu_raw,
        })
    keys = list(counts)
    q_hat = RandomizedPredictor.from_counts([atoms[k] for k in keys], [counts[k] for k in keys])
    lam_bar = lam_sum / t
    return SPResult(
        q_hat=q_hat, lambda_bar=(lam_bar[:K].reshape(A, N), lam_bar[K:].reshape(A, N)),
        nu_bar=nu_bar, nu_under=nu_under, nu_under_raw=nu_raw,
        iterations=t, converged=converged, cost=cost_sum / t, moments=(sg_sum[:K] / t).reshape(A, N),
        eps_hat=eps, history=history,
    )
