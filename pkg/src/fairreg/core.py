"""Shared domain types: losses, datasets, linear and randomized predictors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

HALF_SQUARE = "half_square"
SCALED_LOGISTIC = "scaled_logistic"


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


def _check_unit(name, v):
    v = np.asarray(v, dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v < 0.0) or np.any(v > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return v


@dataclass(frozen=True)
class LossSpec:
    """A bounded, 1-Lipschitz loss on ``[0, 1] x [0, 1]``.

    ``kind`` is ``"half_square"`` for ``(y - u)**2 / 2`` or ``"scaled_logistic"``
    for the rescaled negative log-likelihood of the model
    ``p(Y=1 | u) = sigmoid(C * (2u - 1))``.
    """

    kind: str = HALF_SQUARE
    C: float = 5.0

    def __post_init__(self):
        if self.kind not in (HALF_SQUARE, SCALED_LOGISTIC):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.kind == SCALED_LOGISTIC and not self.C > 1.0:
            raise ValueError("scaled logistic loss needs C > 1")

    @classmethod
    def half_square(cls) -> "LossSpec":
        return cls(HALF_SQUARE)

    @classmethod
    def scaled_logistic(cls, C: float = 5.0) -> "LossSpec":
        return cls(SCALED_LOGISTIC, C)

    @property
    def _norm(self) -> float:
        return 2.0 * (self.C + math.log1p(math.exp(-self.C)))

    def raw(self, y, u):
        """Evaluate without domain checks; ``u`` may leave ``[0, 1]``.

        Learners minimise this extension over unclipped affine scores.
        """
        y = np.asarray(y, dtype=float)
        u = np.asarray(u, dtype=float)
        if self.kind == HALF_SQUARE:
            return 0.5 * (y - u) ** 2
        m = -self.C * (2.0 * y - 1.0) * (2.0 * u - 1.0)
        return np.logaddexp(0.0, m) / self._norm

    def raw_derivative(self, y, u):
        y = np.asarray(y, dtype=float)
        u = np.asarray(u, dtype=float)
        if self.kind == HALF_SQUARE:
            return u - y
        s = 2.0 * y - 1.0
        m = -self.C * s * (2.0 * u - 1.0)
        # d/du log(1 + e^m) = sigmoid(m) * dm/du
        sig = 0.5 * (1.0 + np.tanh(0.5 * m))
        return sig * (-2.0 * self.C * s) / self._norm

    def __call__(self, y, u):
        return eval_loss(self, y, u)


def eval_loss(spec: LossSpec, y, u):
    """Loss value for labels ``y`` and predictions ``u``, both in ``[0, 1]``."""
    y = _check_unit("y", y)
    u = _check_unit("u", u)
    out = spec.raw(y, u)
    return float(out) if out.ndim == 0 else out


def loss_subderivative(spec: LossSpec, y, u):
    """An element of the subdifferential of ``u -> loss(y, u)``."""
    y = _check_unit("y", y)
    u = _check_unit("u", u)
    out = spec.raw_derivative(y, u)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Affine predictor ``clip(<w, x> + b, 0, 1)``."""

    weights: np.ndarray
    intercept: float = 0.0
    clamp: bool = True

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "intercept", float(self.intercept))

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.n_features:
            raise ValueError(
                f"expected {self.n_features} features, got {X.shape[1]}"
            )
        return X @ self.weights + self.intercept

    def predict(self, X) -> np.ndarray:
        s = self.decision_function(X)
        if self.clamp:
            s = np.clip(s, 0.0, 1.0)
        return s

    def key(self) -> tuple:
        return (self.weights.tobytes(), self.intercept, self.clamp)

    def __eq__(self, other):
        return isinstance(other, LinearModel) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"LinearModel(weights={self.weights.tolist()}, intercept={self.intercept})"

    def to_dict(self) -> dict:
        return {
            "weights": [float(v) for v in self.weights],
            "intercept": self.intercept,
            "clamp": self.clamp,
        }

    @classmethod
    def from_dict(cls, d) -> "LinearModel":
        return cls(np.asarray(d["weights"], dtype=float), d["intercept"], d.get("clamp", True))


def predict(model: LinearModel, x) -> float:
    """Prediction of a single feature vector."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return float(model.predict(x.reshape(1, -1))[0])


@dataclass(frozen=True)
class RandomizedPredictor:
    """A finite distribution over base predictors.

    Predicting draws one atom per example and returns its prediction; losses and
    disparities of the distribution are weight-averages over atoms.
    """

    atoms: tuple

    def __post_init__(self):
        atoms = tuple((float(w), f) for w, f in self.atoms)
        if not atoms:
            raise ValueError("a randomized predictor needs at least one atom")
        ws = np.array([w for w, _ in atoms])
        if np.any(ws < 0):
            raise ValueError("atom weights must be nonnegative")
        if abs(math.fsum(ws) - 1.0) > 1e-12:
            raise ValueError(f"atom weights sum to {math.fsum(ws)!r}, not 1")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def point_mass(cls, f) -> "RandomizedPredictor":
        return cls(((1.0, f),))

    @classmethod
    def from_counts(cls, predictors: Sequence, counts: Sequence[int]) -> "RandomizedPredictor":
        total = sum(counts)
        return cls(tuple((c / total, f) for f, c in zip(predictors, counts) if c > 0))

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.atoms])

    @property
    def predictors(self) -> list:
        return [f for _, f in self.atoms]

    def atom_predictions(self, X) -> np.ndarray:
        """Matrix of shape ``(n_atoms, n_samples)``."""
        return np.vstack([f.predict(X) for _, f in self.atoms])

    def predict_mean(self, X) -> np.ndarray:
        return self.weights @ self.atom_predictions(X)

    def predict(self, X, random_state=None) -> np.ndarray:
        rng = np.random.default_rng(random_state)
        P = self.atom_predictions(X)
        pick = rng.choice(len(self.atoms), size=P.shape[1], p=self.weights / self.weights.sum())
        return P[pick, np.arange(P.shape[1])]

    def mix(self, other: "RandomizedPredictor", w: float) -> "RandomizedPredictor":
        """``w * self + (1 - w) * other``."""
        atoms = [(w * a, f) for a, f in self.atoms] + [((1.0 - w) * a, f) for a, f in other.atoms]
        atoms = [(a, f) for a, f in atoms if a > 0]
        total = math.fsum(a for a, _ in atoms)
        return RandomizedPredictor(tuple((a / total, f) for a, f in atoms))


def q_expectation(q: RandomizedPredictor, per_atom) -> float:
    """Weight-averaged value of ``per_atom`` across the atoms of ``q``.

    ``per_atom`` is either a callable ``predictor -> float`` or a mapping keyed
    by predictor.
    """
    get = per_atom if callable(per_atom) else per_atom.__getitem__
    return math.fsum(w * float(get(f)) for w, f in q.atoms)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Examples ``(x, a, y)`` stored column-wise.

    ``groups`` holds integer ids in ``range(group_count)``; every declared group
    must be non-empty.
    """

    X: np.ndarray
    groups: np.ndarray
    y: np.ndarray
    group_count: int | None = None
    group_names: tuple = field(default=())
    feature_names: tuple = field(default=())

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.array(self.y, dtype=float).reshape(-1)
        g = np.asarray(self.groups)
        if g.size and not np.all(np.equal(np.mod(g, 1), 0)):
            raise ValueError("group ids must be integers")
        g = g.astype(np.int64).reshape(-1)
        n = y.shape[0]
        if n == 0:
            raise ValueError("dataset is empty")
        if X.shape[0] != n or g.shape[0] != n:
            raise ValueError("X, groups and y have inconsistent lengths")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        if np.any(~np.isfinite(y)) or np.any(y < 0) or np.any(y > 1):
            raise ValueError("labels must lie in [0, 1]")
        if np.any(g < 0):
            raise ValueError("group ids must be nonnegative")
        k = int(g.max()) + 1 if self.group_count is None else int(self.group_count)
        if np.any(g >= k):
            raise ValueError("group id exceeds group_count")
        sizes = np.bincount(g, minlength=k)
        if np.any(sizes == 0):
            raise ValueError(f"empty group(s): {np.flatnonzero(sizes == 0).tolist()}")
        for arr in (X, y, g):
            arr.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "groups", g)
        object.__setattr__(self, "group_count", k)
        object.__setattr__(self, "_sizes", sizes)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def group_sizes(self) -> np.ndarray:
        return self._sizes

    @property
    def group_freqs(self) -> np.ndarray:
        return self._sizes / self.n

    def group_index(self, a: int) -> np.ndarray:
        return np.flatnonzero(self.groups == a)

    def subset(self, idx) -> "Dataset":
        return Dataset(
            self.X[idx], self.groups[idx], self.y[idx], self.group_count,
            self.group_names, self.feature_names,
        )

    def examples(self) -> Iterable[tuple]:
        for i in range(self.n):
            yield self.X[i], int(self.groups[i]), float(self.y[i])


def mean_loss(spec: LossSpec, y, pred) -> float:
    return float(np.mean(spec.raw(y, pred)))

