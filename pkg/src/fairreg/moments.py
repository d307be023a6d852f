"""Empirical objective and constraint values of predictors.

``group_cdf_moments`` is the sort-and-scan fast path; ``naive_moments`` and
``naive_cost`` are direct double loops kept as reference implementations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, LossSpec, RandomizedPredictor
from .discretize import Grid, LabelCover, base_loss, build_grid, build_label_cover, cost_table


@dataclass(frozen=True, eq=False)
class DiscretizedProblem:
    """A dataset together with its grid, label cover and cost tables."""

    dataset: Dataset
    spec: LossSpec
    grid: Grid
    cover: LabelCover

    def __post_init__(self):
        ds, grid = self.dataset, self.grid
        k = self.cover.snap_index(ds.y)
        ys = self.cover.cover_points[k]
        c = cost_table(self.spec, self.cover, grid)
        j = np.arange(grid.N + 1)
        upper = np.minimum((j + 0.5) / grid.N, 1.0)
        # disc[k, j] = loss(cover_k, floor + alpha/2) - loss(cover_k, alpha/2)
        disc = self.spec.raw(self.cover.cover_points[:, None], upper[None, :])
        disc = disc - base_loss(self.spec, grid, self.cover.cover_points)[:, None]
        for name, val in (("label_index", k), ("y_snapped", ys), ("costs", c), ("disc_table", disc)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @classmethod
    def build(cls, dataset: Dataset, spec: LossSpec, N: int) -> "DiscretizedProblem":
        grid = build_grid(N)
        cover = build_label_cover(dataset.y, grid.alpha)
        return cls(dataset, spec, grid, cover)

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def n_groups(self) -> int:
        return self.dataset.group_count


def _predictions(dataset: Dataset, predictor) -> np.ndarray:
    if isinstance(predictor, np.ndarray):
        return predictor
    return np.asarray(predictor.predict(dataset.X), dtype=float)


def moments_from_predictions(groups, group_count: int, grid: Grid, preds) -> np.ndarray:
    """Disparities ``P[f >= z | A=a] - P[f >= z]`` with shape ``(|A|, N)``."""
    idx = grid.floor_index(preds)
    thresholds = np.arange(1, grid.N + 1)
    sizes = np.bincount(groups, minlength=group_count)
    cond = np.empty((group_count, grid.N))
    order = np.argsort(groups, kind="stable")
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    gidx = idx[order]
    for a in range(group_count):
        s = np.sort(gidx[bounds[a]:bounds[a + 1]])
        above = sizes[a] - np.searchsorted(s, thresholds, side="left")
        cond[a] = above / sizes[a]
    p = sizes / sizes.sum()
    overall = p @ cond
    return cond - overall[None, :]


def group_cdf_moments(dataset: Dataset, grid: Grid, predictor) -> np.ndarray:
    preds = _predictions(dataset, predictor)
    return moments_from_predictions(dataset.groups, dataset.group_count, grid, preds)


def naive_moments(dataset: Dataset, grid: Grid, predictor) -> np.ndarray:
    preds = [float(v) for v in _predictions(dataset, predictor)]
    groups = [int(a) for a in dataset.groups]
    n = len(preds)
    out = np.zeros((dataset.group_count, grid.N))
    for j, z in enumerate(grid.points):
        z = float(z)
        total = sum(1 for v in preds if v >= z) / n
        for a in range(dataset.group_count):
            members = [v for v, g in zip(preds, groups) if g == a]
            out[a, j] = sum(1 for v in members if v >= z) / len(members) - total
    return out


def empirical_cost(problem: DiscretizedProblem, predictor) -> float:
    """Mean of ``disc_loss(Y, f(X)) - loss(snap(Y), alpha/2)``."""
    preds = _predictions(problem.dataset, predictor)
    j = problem.grid.floor_index(preds)
    return float(np.mean(problem.disc_table[problem.label_index, j]))


def naive_cost(problem: DiscretizedProblem, predictor) -> float:
    """``E_i E_Z [c(snap(Y_i), Z) 1{f(X_i) >= Z}]`` by explicit loops."""
    preds = _predictions(problem.dataset, predictor)
    N = problem.N
    total = 0.0
    for i, v in enumerate(preds):
        k = problem.label_index[i]
        for j, z in enumerate(problem.grid.points):
            if v >= z:
                total += problem.costs[k, j] / N
    return total / len(preds)


def sp_statistics(problem: DiscretizedProblem, predictor):
    """``(cost, moments)`` of a base predictor or a randomized predictor."""
    if isinstance(predictor, RandomizedPredictor):
        cost = 0.0
        gam = np.zeros((problem.n_groups, problem.N))
        for w, f in predictor.atoms:
            c, g = sp_statistics(problem, f)
            cost += w * c
            gam += w * g
        return cost, gam
    preds = _predictions(problem.dataset, predictor)
    return empirical_cost(problem, preds), group_cdf_moments(problem.dataset, problem.grid, preds)


def max_disparity(moments: np.ndarray) -> float:
    """``max_{a,z} |gamma_{a,z}|``, the grid Kolmogorov-Smirnov disparity."""
    return float(np.max(np.abs(moments)))


def bgl_group_losses(dataset: Dataset, spec: LossSpec, predictor) -> np.ndarray:
    if isinstance(predictor, RandomizedPredictor):
        return sum(w * bgl_group_losses(dataset, spec, f) for w, f in predictor.atoms)
    preds = _predictions(dataset, predictor)
    losses = spec.raw(dataset.y, preds)
    sums = np.bincount(dataset.groups, weights=losses, minlength=dataset.group_count)
    return sums / dataset.group_sizes


def overall_loss(dataset: Dataset, spec: LossSpec, predictor) -> float:
    if isinstance(predictor, RandomizedPredictor):
        return float(sum(w * overall_loss(dataset, spec, f) for w, f in predictor.atoms))
    return float(np.mean(spec.raw(dataset.y, _predictions(dataset, predictor))))
