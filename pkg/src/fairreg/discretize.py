"""Prediction grid, label cover, discretized loss and cost coefficients.

Grid points are the floats ``j / N`` for ``j = 1..N``. Every rounding helper
works on integer grid indices and is corrected against those exact floats, so
``u >= points[j - 1]`` holds if and only if ``floor_index(u) >= j``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import LossSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Grid:
    n_points: int

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 1:
            raise ValueError("grid size must be a positive integer")
        object.__setattr__(self, "n_points", int(self.n_points))
        pts = np.arange(1, self.n_points + 1) / self.n_points
        pts.setflags(write=False)
        # index 0 stands for the empty prefix (value 0)
        vals = np.concatenate([[0.0], pts])
        vals.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_values", vals)

    @property
    def alpha(self) -> float:
        return 1.0 / self.n_points

    @property
    def N(self) -> int:
        return self.n_points

    def value(self, j):
        """Grid value ``j / N`` for index ``j`` in ``0..N``."""
        return self._values[j]

    def floor_index(self, u) -> np.ndarray:
        """Number of grid points ``<= u``."""
        u = np.asarray(u, dtype=float)
        N = self.n_points
        j = np.clip(np.floor(u * N), 0, N).astype(np.int64)
        vals = self._values
        # one-step corrections against the exact grid floats
        up = (j < N) & (vals[np.minimum(j + 1, N)] <= u)
        j = j + up
        down = (j > 0) & (vals[j] > u)
        return j - down

    def ceil_index(self, z) -> np.ndarray:
        """Index of the smallest grid value (including 0) that is ``>= z``."""
        z = np.asarray(z, dtype=float)
        N = self.n_points
        j = np.clip(np.ceil(z * N), 0, N).astype(np.int64)
        vals = self._values
        down = (j > 0) & (vals[np.maximum(j - 1, 0)] >= z)
        j = j - down
        up = (j < N) & (vals[j] < z)
        return j + up

    def contains(self, z) -> bool:
        j = self.ceil_index(z)
        return bool(j >= 1 and self._values[j] == z)


def build_grid(N: int) -> Grid:
    if N is None or int(N) < 1:
        raise ValueError("grid size must be at least 1")
    return Grid(int(N))


def snap_down(u, alpha: float):
    """Largest multiple of ``alpha`` that is ``<= u``."""
    g = Grid(int(round(1.0 / alpha)))
    out = g.value(g.floor_index(u))
    return float(out) if np.ndim(out) == 0 else out


def snap_up(z, alpha: float):
    """Smallest multiple of ``alpha`` that is ``>= z``."""
    g = Grid(int(round(1.0 / alpha)))
    out = g.value(g.ceil_index(z))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class LabelCover:
    """Greedy ``alpha/2``-cover of a set of labels."""

    cover_points: np.ndarray
    alpha: float

    @property
    def half(self) -> float:
        return self.alpha / 2.0

    def __len__(self):
        return len(self.cover_points)

    def snap_index(self, y, warn: bool = True) -> np.ndarray:
        """Index of the smallest cover point within ``alpha/2`` of each label.

        Labels with no cover point within reach (possible for labels outside
        the set the cover was built from) go to the nearest point.
        """
        y = np.atleast_1d(np.asarray(y, dtype=float))
        c = self.cover_points
        half = self.half
        k = np.searchsorted(c, y - half, side="left")
        lo = np.clip(k - 1, 0, len(c) - 1)
        hi = np.clip(k, 0, len(c) - 1)
        hi2 = np.clip(k + 1, 0, len(c) - 1)
        out = np.full(y.shape, -1, dtype=np.int64)
        # smallest qualifying candidate first; the same float test as the greedy scan
        for cand in (hi2, hi, lo):
            ok = np.abs(y - c[cand]) <= half
            out = np.where(ok, cand, out)
        miss = out < 0
        if np.any(miss):
            if warn:
                logger.warning(
                    "%d label(s) lie beyond alpha/2 of the cover; snapping to nearest",
                    int(miss.sum()),
                )
            near = np.where(
                np.abs(y - c[lo]) <= np.abs(y - c[hi]), lo, hi
            )
            out = np.where(miss, near, out)
        return out

    def snap(self, y, warn: bool = True):
        out = self.cover_points[self.snap_index(y, warn)]
        return float(out[0]) if np.ndim(y) == 0 else out


def build_label_cover(labels, alpha: float) -> LabelCover:
    labels = np.asarray(labels, dtype=float).reshape(-1)
    if labels.size == 0:
        raise ValueError("cannot build a cover of an empty label set")
    if np.any(labels < 0) or np.any(labels > 1):
        raise ValueError("labels must lie in [0, 1]")
    half = alpha / 2.0
    accepted = []
    for y in np.unique(labels):
        if not accepted or y - accepted[-1] > half:
            accepted.append(float(y))
    pts = np.array(accepted)
    pts.setflags(write=False)
    return LabelCover(pts, float(alpha))


def _upper_arg(grid: Grid, j):
    # (j + 1/2) / N, clamped to 1 by the u >= 1 convention
    return np.minimum((np.asarray(j) + 0.5) / grid.N, 1.0)


def discretized_loss(spec: LossSpec, cover: LabelCover, grid: Grid, y, u):
    """``loss(snap(y), floor_alpha(u) + alpha/2)`` with arguments >= 1 read as 1."""
    ys = cover.snap(np.atleast_1d(y))
    j = grid.floor_index(np.atleast_1d(u))
    out = spec.raw(ys, _upper_arg(grid, j))
    return float(out[0]) if np.ndim(y) == 0 and np.ndim(u) == 0 else out


def cost_table(spec: LossSpec, cover: LabelCover, grid: Grid) -> np.ndarray:
    """Cost coefficients ``c(y, z_j)`` for every cover point and grid index.

    Shape ``(len(cover), N)``; column ``j - 1`` holds ``z = j / N``.
    """
    j = np.arange(1, grid.N + 1)
    y = cover.cover_points[:, None]
    hi = spec.raw(y, _upper_arg(grid, j)[None, :])
    lo = spec.raw(y, ((j - 0.5) / grid.N)[None, :])
    return grid.N * (hi - lo)


def cost_coefficient(spec: LossSpec, cover: LabelCover, grid: Grid, y_snapped: float, z: float) -> float:
    if not grid.contains(z):
        raise ValueError(f"{z!r} is not a grid point")
    j = int(grid.ceil_index(z))
    hi = spec.raw(y_snapped, _upper_arg(grid, j))
    lo = spec.raw(y_snapped, (j - 0.5) / grid.N)
    return float(grid.N * (hi - lo))


def base_loss(spec: LossSpec, grid: Grid, y_snapped) -> np.ndarray:
    """``loss(snap(y), alpha/2)``, the offset separating the discretized loss from the cost."""
    return spec.raw(y_snapped, 0.5 / grid.N)


def cover_size_bound(grid: Grid) -> int:
    return 2 * grid.N

