"""Exponentiated-gradient saddle-point solver for bounded group loss.

Each group's average loss must stay below its bound ``zeta_hat[a]``. The
predictor player's best response is a single weighted risk minimisation; the
solver returns ``None`` for ``q_hat`` when the approximate saddle point it
finds violates the bounds by more than the certificate allows, which
signals that the constraints are (nearly) infeasible for the model class.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, LossSpec, RandomizedPredictor


@dataclass
class BGLConfig:
    """Solver settings; ``slack_constant`` adds ``slack_constant / sqrt(n_a)`` to each bound."""

    zeta_hat: float | list = 1.0
    B: float = 10.0
    nu: float = 1e-3
    max_iters: int = 5000
    loss: LossSpec = field(default_factory=LossSpec.half_square)
    slack_constant: float = 0.0
    history_every: int = 1

    def __post_init__(self):
        if not self.B > 0:
            raise ValueError("B must be positive")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        z = np.atleast_1d(np.asarray(self.zeta_hat, dtype=float))
        if np.any(z < 0) or np.any(z > 1):
            raise ValueError("loss bounds must lie in [0, 1]")

    def bounds(self, group_sizes) -> np.ndarray:
        sizes = np.asarray(group_sizes, dtype=float)
        z = np.broadcast_to(np.asarray(self.zeta_hat, dtype=float), sizes.shape).astype(float)
        return z + self.slack_constant / np.sqrt(sizes)

    @property
    def learning_rate(self) -> float:
        return self.nu / (2.0 * self.B)

    def to_dict(self) -> dict:
        z = self.zeta_hat
        return {
            "zeta_hat": list(map(float, z)) if np.ndim(z) else float(z),
            "B": float(self.B), "nu": float(self.nu), "max_iters": int(self.max_iters),
            "loss": self.loss.kind, "C": float(self.loss.C),
            "slack_constant": float(self.slack_constant),
            "history_every": int(self.history_every),
        }


def iteration_bound_bgl(B: float, nu: float, n_groups: int) -> float:
    return 4.0 * B * B * math.log(n_groups + 1) / (nu * nu)


def lambda_from_theta_bgl(theta, B: float) -> np.ndarray:
    """``B exp(theta_a) / (1 + sum exp(theta))`` with max-subtraction."""
    th = np.asarray(theta, dtype=float)
    M = max(0.0, float(th.max(initial=0.0)))
    ex = np.exp(th - M)
    return B * ex / (math.exp(-M) + ex.sum())


@dataclass
class DualStateBGL:
    theta: np.ndarray
    budget: float

    @classmethod
    def zeros(cls, n_groups: int, budget: float) -> "DualStateBGL":
        return cls(np.zeros(n_groups), budget)

    @property
    def lam(self) -> np.ndarray:
        return lambda_from_theta_bgl(self.theta, self.budget)


def lagrangian_bgl(loss_q: float, group_losses, lam, zeta_hat) -> float:
    g = np.asarray(group_losses, dtype=float)
    z = np.broadcast_to(np.asarray(zeta_hat, dtype=float), g.shape)
    return float(loss_q + np.asarray(lam, dtype=float) @ (g - z))


def best_lambda_bgl(group_losses, zeta_hat, B: float) -> np.ndarray:
    """``B`` on the most violated group bound (lowest index on ties), else zeros."""
    g = np.asarray(group_losses, dtype=float)
    viol = g - np.broadcast_to(np.asarray(zeta_hat, dtype=float), g.shape)
    lam = np.zeros_like(g)
    a = int(np.argmax(viol))
    if viol[a] > 0:
        lam[a] = B
    return lam


def bgl_weights(groups, lam, group_count: int | None = None) -> np.ndarray:
    """Per-example weights ``1/n + lam[a_i] / n_{a_i}``."""
    groups = np.asarray(groups)
    lam = np.asarray(lam, dtype=float)
    sizes = np.bincount(groups, minlength=group_count or lam.shape[0])
    if np.any(sizes == 0):
        raise ValueError("every group needs at least one example")
    return 1.0 / groups.shape[0] + lam[groups] / sizes[groups]


def best_f_bgl(dataset: Dataset, lam, spec: LossSpec, risk_learner=None):
    """Weighted risk minimiser for the Lagrangian at ``lam``."""
    if risk_learner is None:
        from .baselines import risk_learner as make_learner

        risk_learner = make_learner(spec)
    w = bgl_weights(dataset.groups, lam, dataset.group_count)
    return risk_learner(dataset.X, dataset.y, w)


@dataclass
class BGLResult:
    q_hat: RandomizedPredictor | None
    q_candidate: RandomizedPredictor
    lambda_bar: np.ndarray
    nu_bar: float
    nu_under: float
    nu_under_raw: float
    iterations: int
    converged: bool
    loss: float
    group_losses: np.ndarray
    zeta_hat: np.ndarray
    history: list = field(default_factory=list, repr=False)

    @property
    def infeasible(self) -> bool:
        """True when the converged saddle point failed the feasibility check."""
        return self.converged and self.q_hat is None

    @property
    def gaps(self):
        return self.nu_bar, self.nu_under

    def history_jsonl(self, **extra) -> str:
        return "".join(json.dumps({**extra, **rec}) + "\n" for rec in self.history)


def run_bgl(dataset: Dataset, config: BGLConfig, risk_learner=None) -> BGLResult:
    """Run the saddle-point iteration and apply the feasibility gate on convergence.

    ``q_candidate`` always holds the final average of best responses. ``q_hat``
    is ``None`` only if the solver converged and some group loss exceeds
    ``zeta_hat[a] + (1 + 2 nu) / B``; a run that hits ``max_iters`` returns the
    current average with ``converged=False``.
    """
    spec = config.loss
    if risk_learner is None:
        from .baselines import risk_learner as make_learner

        risk_learner = make_learner(spec)
    A, B, nu = dataset.group_count, float(config.B), float(config.nu)
    zeta = config.bounds(dataset.group_sizes)
    eta = config.learning_rate
    every = int(config.history_every)
    sizes = dataset.group_sizes

    cache: dict = {}

    def stats(f):
        key = f.key()
        hit = cache.get(key)
        if hit is None:
            loss = spec.raw(dataset.y, f.predict(dataset.X))
            hit = (float(loss.mean()), np.bincount(dataset.groups, weights=loss, minlength=A) / sizes)
            cache[key] = hit
        return key, hit

    def respond(lam):
        return risk_learner(dataset.X, dataset.y, bgl_weights(dataset.groups, lam, A))

    theta = np.zeros(A)
    lam_sum = np.zeros(A)
    gl_sum = np.zeros(A)
    loss_sum = 0.0
    counts: dict = {}
    atoms: dict = {}
    history = []
    converged = False
    nu_bar = nu_under = nu_raw = math.inf

    def lower_gap(L_bar, t):
        lam_bar = lam_sum / t
        _, (l2, g2) = stats(respond(lam_bar))
        raw = L_bar - lagrangian_bgl(l2, g2, lam_bar, zeta)
        return raw, max(raw, 0.0)

    t = 0
    for t in range(1, config.max_iters + 1):
        lam = lambda_from_theta_bgl(theta, B)
        f = respond(lam)
        key, (l_f, g_f) = stats(f)
        if key in counts:
            counts[key] += 1
        else:
            counts[key] = 1
            atoms[key] = f
        loss_sum += l_f
        gl_sum += g_f
        lam_sum += lam

        g_q = gl_sum / t
        viol = float((g_q - zeta).max())
        penalty = float(lam_sum @ (g_q - zeta)) / t
        L_bar = loss_sum / t + penalty
        nu_bar = B * max(viol, 0.0) - penalty
        record = every > 0 and (t == 1 or t % every == 0)
        if nu_bar <= nu or record:
            nu_raw, nu_under = lower_gap(L_bar, t)
        else:
            nu_raw = nu_under = math.nan
        if record:
            history.append({
                "iteration": t, "lagrangian": L_bar, "max_violation": viol,
                "nu_bar": nu_bar, "nu_under": nu_under, "nu_under_raw": nu_raw,
            })
        if nu_bar <= nu and nu_under <= nu:
            converged = True
            break
        theta += eta * (g_f - zeta)

    if math.isnan(nu_raw):
        nu_raw, nu_under = lower_gap(L_bar, t)
    if every > 0 and (not history or history[-1]["iteration"] != t):
        history.append({
            "iteration": t, "lagrangian": L_bar, "max_violation": viol,
            "nu_bar": nu_bar, "nu_under": nu_under, "nu_under_raw": nu_raw,
        })
    keys = list(counts)
    q = RandomizedPredictor.from_counts([atoms[k] for k in keys], [counts[k] for k in keys])
    group_losses = gl_sum / t
    feasible = bool(np.all(group_losses <= zeta + (1.0 + 2.0 * nu) / B))
    return BGLResult(
        q_hat=None if converged and not feasible else q, q_candidate=q,
        lambda_bar=lam_sum / t, nu_bar=nu_bar, nu_under=nu_under, nu_under_raw=nu_raw,
        iterations=t, converged=converged, loss=loss_sum / t, group_losses=group_losses,
        zeta_hat=zeta, history=history,
    )
