"""Slack sweeps, train/test evaluation and Pareto-front selection."""

from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..bgl_solver import BGLConfig, run_bgl
from ..core import Dataset, LossSpec, RandomizedPredictor
from ..discretize import Grid, build_grid
from ..moments import DiscretizedProblem, bgl_group_losses, group_cdf_moments, overall_loss
from ..oracles import make_oracle
from ..sp_solver import SPConfig, run_sp

logger = logging.getLogger(__name__)

DEFAULT_EPS_GRID = (1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01)

POINT_FIELDS = ("eps", "train_loss", "test_loss", "train_disp", "test_disp", "iters", "converged")


@dataclass
class TradeoffPoint:
    """One sweep result; ``eps`` is the swept slack (SP) or loss bound (BGL).

    ``status`` is ``"ok"``, ``"infeasible"`` (BGL null verdict) or ``"error"``;
    metrics of non-ok points are NaN.
    """

    eps: float
    train_loss: float
    test_loss: float
    train_disp: float
    test_disp: float
    iters: int
    converged: bool
    status: str = "ok"
    error: str = ""
    model: RandomizedPredictor | None = field(default=None, repr=False, compare=False)
    history: list = field(default_factory=list, repr=False, compare=False)

    def row(self) -> dict:
        return {k: getattr(self, k) for k in POINT_FIELDS}

    def to_dict(self) -> dict:
        return {**self.row(), "status": self.status, "error": self.error}


def sp_disparity(dataset: Dataset, grid: Grid, q) -> float:
    """Grid KS disparity of ``q``; for a mixture this uses the mixture CDF."""
    if not isinstance(q, RandomizedPredictor):
        q = RandomizedPredictor.point_mass(q)
    gam = sum(w * group_cdf_moments(dataset, grid, f) for w, f in q.atoms)
    return float(np.max(np.abs(gam)))


def bgl_disparity(dataset: Dataset, spec: LossSpec, q) -> float:
    return float(np.max(bgl_group_losses(dataset, spec, q)))


def _failed(eps, exc) -> TradeoffPoint:
    nan = math.nan
    return TradeoffPoint(float(eps), nan, nan, nan, nan, 0, False, "error", f"{type(exc).__name__}: {exc}")


def _sp_point(args) -> TradeoffPoint:
    train, test, eps, config, spec, oracle_kwargs = args
    try:
        cfg = dataclasses.replace(config, eps_hat=eps)
        problem = DiscretizedProblem.build(train, spec, cfg.N)
        oracle = make_oracle(cfg.oracle_kind, problem, **oracle_kwargs)
        res = run_sp(problem, cfg, oracle)
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        logger.warning("sweep point eps=%s failed: %s", eps, exc)
        return _failed(eps, exc)
    q, grid = res.q_hat, problem.grid
    return TradeoffPoint(
        eps=float(eps),
        train_loss=overall_loss(train, spec, q), test_loss=overall_loss(test, spec, q),
        train_disp=sp_disparity(train, grid, q), test_disp=sp_disparity(test, grid, q),
        iters=res.iterations, converged=res.converged, model=q, history=res.history,
    )


def _bgl_point(args) -> TradeoffPoint:
    train, test, zeta, config, group = args
    bound = zeta
    if group is not None:
        # only the chosen group is bounded; the others get the vacuous bound 1
        bound = [1.0] * train.group_count
        bound[group] = float(zeta)
    try:
        res = run_bgl(train, dataclasses.replace(config, zeta_hat=bound))
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        logger.warning("sweep point zeta=%s failed: %s", zeta, exc)
        return _failed(zeta, exc)
    spec = config.loss
    if res.q_hat is None:
        nan = math.nan
        return TradeoffPoint(float(zeta), nan, nan, nan, nan, res.iterations, res.converged,
                             "infeasible", history=res.history)
    q = res.q_hat
    return TradeoffPoint(
        eps=float(zeta),
        train_loss=overall_loss(train, spec, q), test_loss=overall_loss(test, spec, q),
        train_disp=bgl_disparity(train, spec, q), test_disp=bgl_disparity(test, spec, q),
        iters=res.iterations, converged=res.converged, model=q, history=res.history,
    )


def _map(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        # map keeps input order, so reports do not depend on scheduling
        return list(pool.map(fn, tasks))


def sweep_sp(
    train: Dataset, test: Dataset, eps_list=DEFAULT_EPS_GRID, config: SPConfig | None = None,
    oracle_kind: str | None = None, spec: LossSpec | None = None, jobs: int = 1, **oracle_kwargs,
) -> list:
    """One statistical-parity run per slack value, evaluated on both halves."""
    eps_list = list(eps_list)
    if not eps_list:
        raise ValueError("eps_list is empty")
    config = config or SPConfig()
    if oracle_kind is not None:
        config = dataclasses.replace(config, oracle_kind=oracle_kind)
    spec = spec or LossSpec.half_square()
    tasks = [(train, test, e, config, spec, oracle_kwargs) for e in eps_list]
    return _map(_sp_point, tasks, jobs)


def sweep_bgl(
    train: Dataset, test: Dataset, zeta_list, config: BGLConfig | None = None, jobs: int = 1,
    group: int | None = None,
) -> list:
    """One bounded-group-loss run per loss bound, evaluated on both halves.

    With ``group`` set, each bound applies to that group only.
    """
    zeta_list = list(zeta_list)
    if not zeta_list:
        raise ValueError("zeta_list is empty")
    if group is not None and not 0 <= group < train.group_count:
        raise ValueError(f"group {group} out of range")
    config = config or BGLConfig()
    return _map(_bgl_point, [(train, test, z, config, group) for z in zeta_list], jobs)


def pareto_front(points) -> list:
    """Points not dominated in ``(train_loss, train_disp)``; exact ties are all kept.

    A point is dominated if another is no worse in both coordinates and
    strictly better in one. Non-ok points are never on the front.
    """
    pts = [p for p in points if p.status == "ok"]
    front = []
    for p in pts:
        dominated = any(
            q.train_loss <= p.train_loss and q.train_disp <= p.train_disp
            and (q.train_loss < p.train_loss or q.train_disp < p.train_disp)
            for q in pts
        )
        if not dominated:
            front.append(p)
    return front


def unconstrained_point(train: Dataset, test: Dataset, model, spec: LossSpec, N: int = 40) -> TradeoffPoint:
    """Evaluate a fixed baseline model with the same metrics as SP sweep points."""
    grid = build_grid(N)
    return TradeoffPoint(
        eps=math.inf,
        train_loss=overall_loss(train, spec, model), test_loss=overall_loss(test, spec, model),
        train_disp=sp_disparity(train, grid, model), test_disp=sp_disparity(test, grid, model),
        iters=0, converged=True, model=RandomizedPredictor.point_mass(model),
    )
