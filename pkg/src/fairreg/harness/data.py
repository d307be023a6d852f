"""Dataset ingestion, train/test splitting and synthetic data."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from ..core import Dataset

logger = logging.getLogger(__name__)

MAX_SPLIT_RETRIES = 20


class DataError(ValueError):
    """Malformed input data; the CLI maps it to exit code 2."""


@dataclass(frozen=True)
class DataSchema:
    """Which CSV columns hold the label, the group and the features.

    ``feature_columns=None`` means every remaining column.
    """

    label_column: str
    group_column: str
    feature_columns: tuple | None = None
    normalize: bool = True

    def __post_init__(self):
        if self.label_column == self.group_column:
            raise DataError("label and group columns must differ")
        if self.feature_columns is not None:
            object.__setattr__(self, "feature_columns", tuple(self.feature_columns))
            bad = {self.label_column, self.group_column} & set(self.feature_columns)
            if bad:
                raise DataError(f"feature columns overlap label/group: {sorted(bad)}")


def _minmax(v: np.ndarray) -> np.ndarray:
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


def _parse_float(text: str, row: int, col: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"row {row}: column {col!r}: cannot parse {text!r} as a number") from None
    if not np.isfinite(v):
        raise DataError(f"row {row}: column {col!r}: non-finite value {text!r}")
    return v


def load_csv(path, schema: DataSchema) -> Dataset:
    """Read a headed CSV file into a :class:`Dataset`.

    Groups are numbered in order of first appearance. With ``schema.normalize``
    the label and every feature are min-max scaled to ``[0, 1]``. Constant
    feature columns are dropped with a warning.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    header = [h.strip() for h in header]
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names in header")
    pos = {h: i for i, h in enumerate(header)}
    for col in (schema.label_column, schema.group_column):
        if col not in pos:
            raise DataError(f"{path}: missing column {col!r}")
    if schema.feature_columns is None:
        feats = [h for h in header if h not in (schema.label_column, schema.group_column)]
    else:
        missing = [c for c in schema.feature_columns if c not in pos]
        if missing:
            raise DataError(f"{path}: missing feature column(s) {missing}")
        feats = list(schema.feature_columns)
    if not rows:
        raise DataError(f"{path}: no data rows")

    ids: dict = {}
    groups, labels, X = [], [], []
    for r, row in enumerate(rows, start=2):  # header is line 1
        if len(row) != len(header):
            raise DataError(f"row {r}: expected {len(header)} fields, found {len(row)}")
        gval = row[pos[schema.group_column]].strip()
        groups.append(ids.setdefault(gval, len(ids)))
        labels.append(_parse_float(row[pos[schema.label_column]], r, schema.label_column))
        X.append([_parse_float(row[pos[c]], r, c) for c in feats])

    y = np.array(labels)
    X = np.array(X, dtype=float).reshape(len(rows), len(feats))
    if schema.normalize:
        y = _minmax(y)
    elif np.any(y < 0) or np.any(y > 1):
        raise DataError("labels fall outside [0, 1]; enable normalisation")
    keep = [j for j in range(X.shape[1]) if np.ptp(X[:, j]) > 0]
    if len(keep) < X.shape[1]:
        dropped = [feats[j] for j in range(X.shape[1]) if j not in keep]
        logger.warning("dropping constant feature column(s): %s", ", ".join(dropped))
    X = X[:, keep]
    feats = [feats[j] for j in keep]
    if schema.normalize and X.shape[1]:
        X = np.column_stack([_minmax(X[:, j]) for j in range(X.shape[1])])
    return Dataset(X, np.array(groups), y, len(ids), tuple(ids), tuple(feats))


def split(dataset: Dataset, fraction: float = 0.5, seed: int = 0):
    """Seeded shuffle-and-split keeping every group on both sides.

    ``fraction`` of the rows (rounded) go to the training half. If a group
    would vanish from either side the permutation is redrawn from the next
    seed, up to ``MAX_SPLIT_RETRIES`` times.
    """
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie strictly between 0 and 1")
    n = dataset.n
    k = int(round(fraction * n))
    if not 0 < k < n:
        raise DataError(f"cannot split {n} rows with fraction {fraction}")
    for attempt in range(MAX_SPLIT_RETRIES):
        perm = np.random.default_rng(seed + attempt).permutation(n)
        tr, te = np.sort(perm[:k]), np.sort(perm[k:])
        A = dataset.group_count
        if (np.bincount(dataset.groups[tr], minlength=A).all()
                and np.bincount(dataset.groups[te], minlength=A).all()):
            return dataset.subset(tr), dataset.subset(te)
    raise DataError(f"no split within {MAX_SPLIT_RETRIES} draws keeps every group on both sides")


def synth_generate(
    n: int = 2000, d: int = 5, group_weights=(0.5, 0.5), mean_shift: float = 0.0,
    noise_sd: float = 0.5, seed: int = 0, group_feature: bool = True,
) -> Dataset:
    """Synthetic regression data whose labels depend on group membership.

    Features are standard normal; the latent score is ``<w, x> + mean_shift * a
    + noise`` for group id ``a`` and is min-max scaled into the label. With
    ``group_feature`` the one-hot group indicators (first group dropped) are
    appended to the features so that a linear model can pick up the shift.
    """
    if n < 2 or d < 0:
        raise ValueError("need n >= 2 and d >= 0")
    gw = np.asarray(group_weights, dtype=float)
    if gw.ndim != 1 or gw.size < 1 or np.any(gw < 0) or gw.sum() <= 0:
        raise ValueError("group_weights must be a nonnegative vector with positive sum")
    if noise_sd < 0:
        raise ValueError("noise_sd must be nonnegative")
    rng = np.random.default_rng(seed)
    A = gw.size
    w = rng.normal(size=d) / np.sqrt(max(d, 1))
    X = rng.normal(size=(n, d))
    g = rng.choice(A, size=n, p=gw / gw.sum())
    # make sure every group is present
    missing = [a for a in range(A) if not np.any(g == a)]
    for i, a in enumerate(missing):
        g[i] = a
    latent = X @ w + mean_shift * g + noise_sd * rng.normal(size=n)
    y = _minmax(latent)
    names = [f"x{j}" for j in range(d)]
    if group_feature and A > 1:
        X = np.hstack([X, (g[:, None] == np.arange(1, A)[None, :]).astype(float)])
        names += [f"group_{a}" for a in range(1, A)]
    return Dataset(X, g, y, A, tuple(f"g{a}" for a in range(A)), tuple(names))
