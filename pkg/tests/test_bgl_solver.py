import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairreg.baselines import fit_unconstrained
from fairreg.bgl_solver import (
    BGLConfig, DualStateBGL, best_f_bgl, best_lambda_bgl, bgl_weights, iteration_bound_bgl,
    lagrangian_bgl, lambda_from_theta_bgl, run_bgl,
)
from fairreg.core import Dataset, LossSpec
from fairreg.moments import bgl_group_losses, overall_loss

from .conftest import make_linear_data, make_noisy_group_data

HS = LossSpec.half_square()


def test_lagrangian_examples():
    assert lagrangian_bgl(0.3, [0.5, 0.1], [0.0, 0.0], 0.2) == 0.3
    assert lagrangian_bgl(0.3, [0.2], [1.0], [0.2]) == pytest.approx(0.3)
    assert lagrangian_bgl(0.3, [0.5], [2.0], [0.2]) == pytest.approx(0.9)


def test_best_lambda():
    assert not best_lambda_bgl([0.1, 0.2], 0.3, 5.0).any()
    lam = best_lambda_bgl([0.4, 0.5], [0.3, 0.3], 5.0)
    assert lam.tolist() == [0.0, 5.0]
    assert best_lambda_bgl([0.5, 0.5], 0.3, 1.0).tolist() == [1.0, 0.0]


def test_weight_examples():
    g = np.array([0, 0, 1, 1])
    assert np.allclose(bgl_weights(g, [0.5, 0.0]), [0.5, 0.5, 0.25, 0.25])
    assert np.allclose(bgl_weights(g, [0.0, 0.0]), 0.25)
    lam = np.array([0.3, 1.1])
    assert np.allclose(bgl_weights(g, 2 * lam), 2 * bgl_weights(g, lam) - 0.25)


@given(
    st.lists(st.integers(0, 2), min_size=3, max_size=40).filter(lambda v: len(set(v)) == 3),
    st.lists(st.floats(0, 20), min_size=3, max_size=3),
)
def test_weights_floor_and_total(groups, lam):
    w = bgl_weights(groups, lam)
    assert np.all(w >= 1.0 / len(groups))
    assert w.sum() == pytest.approx(1.0 + sum(lam), rel=1e-12, abs=1e-12)


def test_empty_group_rejected():
    with pytest.raises(ValueError):
        bgl_weights([0, 0, 2], [1.0, 1.0, 1.0])


@given(st.lists(st.floats(-60, 60), min_size=1, max_size=6), st.floats(0.01, 50))
def test_lambda_budget(theta, B):
    lam = lambda_from_theta_bgl(theta, B)
    assert np.all(lam >= 0)
    assert lam.sum() < B or math.isclose(lam.sum(), B, rel_tol=1e-12)


def test_dual_state_zeros():
    assert np.allclose(DualStateBGL.zeros(3, 4.0).lam, 1.0)


def test_config():
    with pytest.raises(ValueError):
        BGLConfig(zeta_hat=1.2)
    with pytest.raises(ValueError):
        BGLConfig(B=-1)
    cfg = BGLConfig(zeta_hat=[0.1, 0.2], slack_constant=2.0, B=4, nu=0.4)
    assert np.allclose(cfg.bounds([4, 16]), [1.1, 0.7])
    assert cfg.learning_rate == pytest.approx(0.05)
    assert json.loads(json.dumps(cfg.to_dict()))["zeta_hat"] == [0.1, 0.2]
    assert iteration_bound_bgl(2, 0.1, 2) == pytest.approx(16 * math.log(3) / 0.01)


def test_best_f_zero_lambda_is_plain_fit():
    ds = make_linear_data(n=80, seed=4)
    f = best_f_bgl(ds, [0.0, 0.0], HS)
    f0 = fit_unconstrained(ds, HS)
    assert np.allclose(f.weights, f0.weights, atol=1e-10)


@pytest.fixture(scope="module")
def noisy():
    return make_noisy_group_data()


@pytest.fixture(scope="module")
def vacuous_run(noisy):
    cfg = BGLConfig(zeta_hat=1.0, B=2.0, nu=0.02, max_iters=int(iteration_bound_bgl(2, 0.02, 2)) + 1,
                    history_every=500)
    return cfg, run_bgl(noisy, cfg)


def test_vacuous_bound_matches_unconstrained(noisy, vacuous_run):
    cfg, res = vacuous_run
    assert res.converged and res.q_hat is not None and not res.infeasible
    assert res.iterations <= iteration_bound_bgl(cfg.B, cfg.nu, 2)
    base = overall_loss(noisy, HS, fit_unconstrained(noisy, HS))
    assert res.loss <= base + 2 * cfg.nu
    assert res.loss == pytest.approx(overall_loss(noisy, HS, res.q_hat), abs=1e-12)
    assert np.allclose(res.group_losses, bgl_group_losses(noisy, HS, res.q_hat), atol=1e-12)


def test_history_schema(vacuous_run):
    cfg, res = vacuous_run
    recs = [json.loads(s) for s in res.history_jsonl(zeta=1.0).splitlines()]
    assert recs[0]["iteration"] == 1 and recs[-1]["iteration"] == res.iterations
    assert all(r["zeta"] == 1.0 for r in recs)


def test_zero_bound_on_noisy_group_is_null(noisy):
    cfg = BGLConfig(zeta_hat=[1.0, 0.0], B=10.0, nu=0.05,
                    max_iters=int(iteration_bound_bgl(10, 0.05, 2)) + 1, history_every=0)
    res = run_bgl(noisy, cfg)
    assert res.converged and res.q_hat is None and res.infeasible
    assert res.iterations <= iteration_bound_bgl(cfg.B, cfg.nu, 2)
    # gate consistency: loosening every bound past the candidate's losses admits it
    worst = float(res.group_losses.max())
    loose = np.minimum(res.zeta_hat + (1 + 2 * cfg.nu) / cfg.B + worst, 1.0)
    assert np.all(res.group_losses <= loose + (1 + 2 * cfg.nu) / cfg.B)


def test_non_convergence_keeps_candidate(noisy):
    res = run_bgl(noisy, BGLConfig(zeta_hat=[1.0, 0.0], B=10.0, nu=1e-3, max_iters=20))
    assert not res.converged and res.q_hat is res.q_candidate and not res.infeasible
    assert res.iterations == 20


def test_deterministic(noisy):
    cfg = BGLConfig(zeta_hat=[0.3, 0.2], B=5.0, nu=0.01, max_iters=200, history_every=7)
    a, b = run_bgl(noisy, cfg), run_bgl(noisy, cfg)
    assert a.history == b.history and a.loss == b.loss


def test_logistic_loss_runs():
    ds = make_linear_data(n=100, seed=5)
    spec = LossSpec.scaled_logistic()
    res = run_bgl(ds, BGLConfig(zeta_hat=1.0, B=1.0, nu=0.1, max_iters=2000, loss=spec))
    assert res.converged
    assert res.loss <= overall_loss(ds, spec, fit_unconstrained(ds, spec)) + 0.2 + 1e-3


def test_single_group_dataset():
    ds = Dataset(np.arange(6.0)[:, None], np.zeros(6, dtype=int), np.linspace(0, 1, 6))
    res = run_bgl(ds, BGLConfig(zeta_hat=1.0, B=1.0, nu=0.1, max_iters=500))
    assert res.converged and res.q_hat is not None
