import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairreg.baselines import fit_unconstrained
from fairreg.core import Dataset, LinearModel, LossSpec
from fairreg.moments import DiscretizedProblem, sp_statistics
from fairreg.oracles import (
    CSOracle, CandidateOracle, LSOracle, MatchedLossOracle, best_h_cs, best_h_ls, best_h_matched,
    build_g_lambda, c_lambda, c_lambda_table, cs_instances, ls_targets, make_oracle, matched_rows,
    net_lambda, target_index_table, to_weighted_binary,
)

from .conftest import make_linear_data

HS = LossSpec.half_square()
SL = LossSpec.scaled_logistic()


def lagrangian_value(problem, f, lam):
    c, g = sp_statistics(problem, f)
    return c + float(np.sum(lam * g))


def test_net_lambda_examples():
    assert np.all(net_lambda(np.full((2, 3), 0.4), np.full((2, 3), 0.4)) == 0)
    lp = np.zeros((1, 2))
    lp[0, 1] = 2.0
    assert net_lambda(lp, np.zeros((1, 2)))[0, 1] == 2.0
    assert net_lambda(0.5, 1.25) == -0.75


def test_c_lambda_examples():
    p = np.array([0.5, 0.5])
    lam = np.zeros((2, 4))
    assert c_lambda(0.3, lam, 0, 2, p, 4) == 0.3
    lam[0, 1] = 0.1
    assert c_lambda(0.3, lam, 0, 1, p, 4) == pytest.approx(0.7)
    assert c_lambda(0.3, lam, 1, 1, p, 4) == pytest.approx(-0.1)
    with pytest.raises(ValueError):
        c_lambda(0.3, lam, 0, 1, np.array([1.0, 0.0]), 4)


def test_c_lambda_group_adjustment_is_mean_zero():
    ds = make_linear_data(n=90, n_groups=3)
    prob = DiscretizedProblem.build(ds, HS, 5)
    lam = np.random.default_rng(0).normal(size=(3, 5))
    tab = c_lambda_table(prob, lam)
    adj = tab - prob.costs[:, None, :]
    assert np.max(np.abs(np.einsum("a,kaj->kj", ds.group_freqs, adj))) <= 1e-12


def _half_example_problem():
    ds = Dataset(np.zeros((3, 1)), [0, 1, 1], [0.0, 0.5, 1.0])
    return DiscretizedProblem.build(ds, HS, 4)


def test_g_lambda_and_targets_at_zero():
    prob = _half_example_problem()
    g = build_g_lambda(prob, np.zeros((2, 4)))
    k = list(prob.cover.cover_points).index(0.5)
    assert np.allclose(g.values[k, 0, :4], [0, -0.0625, -0.0625, 0], atol=1e-15)
    # the last increment uses loss(y, 1) in place of loss(y, 1 + alpha/2)
    assert g.values[k, 0, 4] == pytest.approx((HS(0.5, 1.0) - HS(0.5, 0.875)) / 1.0, abs=1e-15)
    assert np.all(g.values[:, :, 0] == 0)
    full = c_lambda_table(prob, np.zeros((2, 4))).sum(axis=2) / 4
    assert np.allclose(g.values[:, :, -1], full, atol=1e-15)
    jt = target_index_table(g)
    assert prob.grid.value(jt[k, 0]) == 0.5
    k1 = list(prob.cover.cover_points).index(1.0)
    assert prob.grid.value(jt[k1, 1]) == 1.0
    assert list(ls_targets(g, prob)) == [0.0, 0.5, 1.0]


def test_targets_zero_when_all_costs_positive():
    prob = _half_example_problem()
    lam = np.zeros((2, 4))
    lam[0] = 1.0  # big positive push for group 0
    g = build_g_lambda(prob, lam)
    tab = c_lambda_table(prob, lam)
    for k in range(len(prob.cover)):
        if np.all(tab[k, 0] > 0):
            assert target_index_table(g)[k, 0] == 0


@given(st.integers(0, 5000))
def test_lagrangian_equals_cs_objective(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(1, 12))
    A = int(rng.integers(2, 4))
    ds = make_linear_data(n=60, n_groups=A, seed=seed)
    spec = HS if seed % 2 else SL
    prob = DiscretizedProblem.build(ds, spec, N)
    lam = rng.normal(scale=2.0, size=(A, N))
    f = LinearModel(rng.normal(scale=0.3, size=3), rng.uniform(0, 1))
    preds = f.predict(ds.X)
    tab = c_lambda_table(prob, lam)
    per = tab[prob.label_index, ds.groups]  # (n, N)
    above = preds[:, None] >= prob.grid.points[None, :]
    cs_obj = np.mean(np.sum(per * above, axis=1) / N)
    assert abs(lagrangian_value(prob, f, lam) - cs_obj) <= 1e-10
    # the prefix-sum table gives the same per-example values
    g = build_g_lambda(prob, lam)
    j = prob.grid.floor_index(preds)
    assert np.allclose(g.values[prob.label_index, ds.groups, j], np.sum(per * above, axis=1) / N, atol=1e-12)


def test_cs_instances_and_binary_conversion():
    ds = make_linear_data(n=100)
    prob = DiscretizedProblem.build(ds, HS, 8)
    rows, z, cost = cs_instances(prob, np.zeros((2, 8)))
    assert len(rows) == len(z) == len(cost) == 800
    W, Y = to_weighted_binary([-0.3, 0.3, 0.0])
    assert list(W) == [0.3, 0.3, 0.0] and list(Y) == [1.0, 0.0, 1.0]


def test_cs_oracle_near_unconstrained_at_zero_lambda():
    ds = make_linear_data(n=100, d=2, seed=5, noise=0.02)
    prob = DiscretizedProblem.build(ds, HS, 8)
    f_cs = best_h_cs(prob, np.zeros((2, 8)))
    f_ls = fit_unconstrained(ds, HS)
    assert np.max(np.abs(f_cs.weights)) <= 1.0 and abs(f_cs.intercept) <= 1.0
    assert sp_statistics(prob, f_cs)[0] <= sp_statistics(prob, f_ls)[0] + 0.01


def test_ls_oracle_at_zero_lambda_fits_snapped_labels():
    ds = make_linear_data(n=80, seed=6)
    prob = DiscretizedProblem.build(ds, HS, 10)
    f = best_h_ls(prob, np.zeros((2, 10)))
    U = ls_targets(build_g_lambda(prob, np.zeros((2, 10))), prob)
    assert U.shape == (ds.n,)
    ref = np.linalg.lstsq(np.c_[ds.X, np.ones(ds.n)], U, rcond=None)[0]
    assert np.allclose(np.r_[f.weights, f.intercept], ref, atol=1e-10)


def test_matched_rows():
    y1, y2, W1, W2 = matched_rows(SL, np.array([1.0, 0.5, 0.0]))
    assert list(y1) == [0, 0, 0] and list(y2) == [1, 1, 1]
    assert list(W1) == [0.0, 0.5, 1.0] and list(W2) == [1.0, 0.5, 0.0]
    assert np.allclose(W1 + W2, 1.0)


def test_matched_nulling_rule_zeroes_derivative():
    U = np.linspace(0.05, 0.95, 19)
    _, _, W1, W2 = matched_rows(SL, U, rule="nulling")
    grad = W1 * SL.raw_derivative(0.0, U) + W2 * SL.raw_derivative(1.0, U)
    assert np.max(np.abs(grad)) <= 1e-12
    with pytest.raises(ValueError):
        matched_rows(SL, U, rule="other")


def test_matched_half_square_equals_ls():
    rng = np.random.default_rng(0)
    for seed in range(5):
        ds = make_linear_data(n=70, seed=seed)
        prob = DiscretizedProblem.build(ds, HS, 6)
        lam = rng.normal(scale=0.5, size=(2, 6))
        a, b = best_h_matched(prob, lam), best_h_ls(prob, lam)
        assert np.max(np.abs(a.weights - b.weights)) <= 1e-10
        assert abs(a.intercept - b.intercept) <= 1e-10


@pytest.mark.parametrize("kind,spec", [("ls", HS), ("matched", HS), ("matched", SL), ("cs", HS)])
def test_oracles_beat_zero_predictor(kind, spec):
    ds = make_linear_data(n=80, seed=2)
    prob = DiscretizedProblem.build(ds, spec, 6)
    oracle = make_oracle(kind, prob)
    zero = LinearModel(np.zeros(3), 0.0)
    rng = np.random.default_rng(1)
    for _ in range(3):
        lam = rng.normal(scale=0.05, size=(2, 6))
        f = oracle(lam)
        assert lagrangian_value(prob, f, lam) <= lagrangian_value(prob, zero, lam) + 1e-3


def test_make_oracle_and_kinds():
    ds = make_linear_data(n=30)
    prob = DiscretizedProblem.build(ds, HS, 4)
    assert isinstance(make_oracle("cs", prob), CSOracle)
    assert isinstance(make_oracle("ls", prob), LSOracle)
    assert isinstance(make_oracle("matched", prob), MatchedLossOracle)
    with pytest.raises(ValueError):
        make_oracle("trees", prob)


def test_candidate_oracle_is_exact_argmin():
    ds = make_linear_data(n=60)
    prob = DiscretizedProblem.build(ds, HS, 4)
    rng = np.random.default_rng(3)
    cands = [LinearModel(rng.normal(scale=0.3, size=3), rng.uniform(0.2, 0.8)) for _ in range(6)]
    o = CandidateOracle(prob, cands)
    for _ in range(20):
        lam = rng.normal(size=(2, 4))
        vals = [lagrangian_value(prob, f, lam) for f in cands]
        assert o(lam) is cands[int(np.argmin(vals))]
