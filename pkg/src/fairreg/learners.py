"""Weighted base learners called by the best-response oracles.

All learners fit an affine score ``<w, x> + b`` and return a
:class:`~fairreg.core.LinearModel` that clips the score to ``[0, 1]``.
"""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.exceptions import ConvergenceWarning

from .core import LinearModel, LossSpec
from .simplex import linprog


def _as_2d(X):
    X = np.asarray(X, dtype=float)
    return X.reshape(-1, 1) if X.ndim == 1 else X


def fit_weighted_least_squares(X, y, sample_weight=None, ridge: float = 0.0) -> LinearModel:
    """Minimise ``sum_i w_i (y_i - <w, x_i> - b)^2 + ridge * |w|^2``.

    The intercept is not penalised. Rank-deficient systems get a small ridge
    jitter (``1e-8`` times the mean diagonal of the weighted Gram matrix).
    """
    X = _as_2d(X)
    y = np.asarray(y, dtype=float).reshape(-1)
    n, d = X.shape
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float).reshape(-1)
    if np.any(w < 0):
        raise ValueError("sample weights must be nonnegative")
    if not np.any(w > 0):
        raise ValueError("at least one sample weight must be positive")
    D = np.hstack([X, np.ones((n, 1))])
    sw = np.sqrt(w)
    A = D * sw[:, None]
    t = y * sw
    if ridge > 0:
        theta = _ridge_solve(A, t, ridge, d)
    else:
        theta, _, rank, _ = np.linalg.lstsq(A, t, rcond=None)
        if rank < d + 1:
            jitter = 1e-8 * max(np.einsum("ij,ij->", A, A) / (d + 1), 1e-300)
            theta = _ridge_solve(A, t, jitter, d)
    return LinearModel(theta[:d], theta[d])


def _ridge_solve(A, t, ridge, d):
    P = np.zeros((d, A.shape[1]))
    P[:, :d] = np.sqrt(ridge) * np.eye(d)
    theta, *_ = np.linalg.lstsq(np.vstack([A, P]), np.concatenate([t, np.zeros(d)]), rcond=None)
    return theta


def logistic_objective(X, y, sample_weight, weights, intercept, spec: LossSpec, reg: float = 0.0):
    """Value and gradient of the normalised weighted scaled-logistic risk.

    ``F = sum_i W_i loss(y_i, s_i) / sum_i W_i + reg/2 |w|^2`` with
    ``s_i = <w, x_i> + b`` left unclipped.
    """
    X = _as_2d(X)
    W = np.asarray(sample_weight, dtype=float)
    s = X @ weights + intercept
    tot = W.sum()
    val = (W @ spec.raw(y, s)) / tot + 0.5 * reg * (weights @ weights)
    r = W * spec.raw_derivative(y, s) / tot
    return val, X.T @ r + reg * weights, r.sum()


def fit_weighted_logistic(
    X, y, sample_weight=None, spec: LossSpec | None = None, reg: float = 1e-4,
    tol: float = 1e-7, max_iter: int = 20_000, init=None,
) -> LinearModel:
    """Full-batch gradient descent with backtracking on the scaled-logistic risk.

    Iterates in standardised coordinates (a diagonal preconditioner); the
    objective itself is always the one in :func:`logistic_objective`. Stops
    once the gradient's infinity norm is at most ``tol``; hitting
    ``max_iter`` first raises a :class:`ConvergenceWarning`.
    """
    spec = spec or LossSpec.scaled_logistic()
    X = _as_2d(X)
    y = np.asarray(y, dtype=float).reshape(-1)
    n, d = X.shape
    W = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float).reshape(-1)
    if not np.any(W > 0):
        raise ValueError("at least one sample weight must be positive")
    keep = W > 0
    X, y, W = X[keep], y[keep], W[keep]

    mu = (W @ X) / W.sum()
    sd = np.sqrt((W @ (X - mu) ** 2) / W.sum())
    sd[sd == 0] = 1.0

    def to_orig(v, c):
        w = v / sd
        return w, c - mu @ w

    def f_and_g(v, c):
        w, b = to_orig(v, c)
        val, gw, gb = logistic_objective(X, y, W, w, b, spec, reg)
        # chain rule back to the standardised coordinates
        return val, gw / sd - gb * (mu / sd), gb, gw, gb

    if init is None:
        v, c = np.zeros(d), 0.5
    else:
        w0, b0 = np.asarray(init[0], dtype=float), float(init[1])
        v, c = w0 * sd, b0 + mu @ w0
    val, gv, gc, gw, gb = f_and_g(v, c)
    step = 1.0
    for _ in range(max_iter):
        if max(np.abs(gw).max(initial=0.0), abs(gb)) <= tol:
            break
        gnorm2 = gv @ gv + gc * gc
        while True:
            v1, c1 = v - step * gv, c - step * gc
            val1, gv1, gc1, gw1, gb1 = f_and_g(v1, c1)
            if val1 <= val - 0.5 * step * gnorm2 or step < 1e-14:
                break
            step *= 0.5
        v, c, val, gv, gc, gw, gb = v1, c1, val1, gv1, gc1, gw1, gb1
        step *= 2.0
    else:
        warnings.warn("weighted logistic fit hit max_iter", ConvergenceWarning, stacklevel=2)
    w, b = to_orig(v, c)
    return LinearModel(w, b)


HINGE_MARGIN_FACTOR = 0.5  # margin is alpha/2


def hinge_objective(beta, X, z, labels, sample_weight, margin):
    """``sum_i W_i max(0, margin - Y_i (<beta, [x_i, 1]> - z_i))``; labels {0, 1} map to {-1, +1}."""
    s = _as_2d(X) @ beta[:-1] + beta[-1]
    Y = _pm_labels(labels)
    return float(np.asarray(sample_weight, dtype=float) @ np.maximum(0.0, margin - Y * (s - z)))


def _pm_labels(labels):
    labels = np.asarray(labels, dtype=float).reshape(-1)
    return np.where(labels > 0, 1.0, -1.0)


def fit_threshold_classifier(
    X, z, labels, sample_weight, margin: float, n_iter: int = 2000, step_scale: float = 0.1,
) -> np.ndarray:
    """Weighted hinge fit of ``h(x, z) = 1{<beta, x> + b >= z}`` over ``|beta|_inf <= 1``.

    ``labels`` may be {0, 1} or {-1, +1}. Projected subgradient descent with
    step ``step_scale * sqrt(dim) / sqrt(t)`` along the normalised subgradient;
    the best iterate is returned as ``[beta..., b]``.
    """
    X = _as_2d(X)
    z = np.asarray(z, dtype=float).reshape(-1)
    Y = _pm_labels(labels)
    W = np.asarray(sample_weight, dtype=float).reshape(-1)
    if X.shape[0] == 0:
        raise ValueError("no instances")
    D = np.hstack([X, np.ones((X.shape[0], 1))])
    dim = D.shape[1]
    WY = W * Y
    beta = np.zeros(dim)
    best, best_val = beta.copy(), np.inf
    radius = step_scale * np.sqrt(dim)
    for t in range(1, n_iter + 1):
        slack = margin - Y * (D @ beta - z)
        val = float(W @ np.maximum(slack, 0.0))
        if val < best_val:
            best, best_val = beta.copy(), val
        if val == 0.0:
            break
        g = -(WY * (slack > 0)) @ D
        gn = np.linalg.norm(g)
        if gn == 0.0:
            break
        beta = np.clip(beta - (radius / np.sqrt(t)) * g / gn, -1.0, 1.0)
    slack = margin - Y * (D @ beta - z)
    if float(W @ np.maximum(slack, 0.0)) < best_val:
        best = beta
    return best


def hinge_lp(X, z, labels, sample_weight, margin: float):
    """Exact weighted hinge minimiser over the box via the dense simplex.

    Returns ``(beta_with_intercept, objective)``. Desk-scale only.
    """
    X = _as_2d(X)
    z = np.asarray(z, dtype=float).reshape(-1)
    Y = _pm_labels(labels)
    W = np.asarray(sample_weight, dtype=float).reshape(-1)
    m = X.shape[0]
    D = np.hstack([X, np.ones((m, 1))])
    dim = D.shape[1]
    # variables: u = beta + 1 in [0, 2]^dim, then t >= 0 per row
    c = np.concatenate([np.zeros(dim), W])
    # t_i >= margin - Y_i (<u - 1, D_i> - z_i)  <=>  -Y_i<u, D_i> - t_i <= -margin - Y_i(sum D_i + z_i)
    A1 = np.hstack([-(Y[:, None] * D), -np.eye(m)])
    b1 = -margin - Y * (D.sum(axis=1) + z)
    A2 = np.hstack([np.eye(dim), np.zeros((dim, m))])
    b2 = np.full(dim, 2.0)
    res = linprog(c, np.vstack([A1, A2]), np.concatenate([b1, b2]))
    if not res.success:
        raise RuntimeError(f"hinge LP failed: {res.status}")
    beta = res.x[:dim] - 1.0
    return beta, hinge_objective(beta, X, z, Y, W, margin)
