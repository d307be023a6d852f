"""Command-line interface.

Exit codes: 0 success, 2 data error, 3 infeasible loss bounds, 4 no
convergence under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from ..baselines import fit_seo, fit_unconstrained
from ..bgl_solver import BGLConfig, run_bgl
from ..core import HALF_SQUARE, SCALED_LOGISTIC, Dataset, LossSpec
from ..discretize import build_grid
from ..moments import DiscretizedProblem, bgl_group_losses, overall_loss
from ..oracles import ORACLES, make_oracle
from ..sp_solver import SPConfig, run_sp
from .data import DataError, DataSchema, load_csv, split, synth_generate
from .report import (
    load_model, save_model, write_history_jsonl, write_points_csv, write_results_json,
)
from .sweep import DEFAULT_EPS_GRID, pareto_front, sp_disparity, sweep_bgl, sweep_sp

EXIT_OK = 0
EXIT_DATA = 2
EXIT_INFEASIBLE = 3
EXIT_NOT_CONVERGED = 4

logger = logging.getLogger("fairreg")


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _slack(text: str):
    vals = _floats(text)
    return vals[0] if len(vals) == 1 else vals


def _spec(args) -> LossSpec:
    return LossSpec.half_square() if args.loss == HALF_SQUARE else LossSpec.scaled_logistic(args.C)


def _add_data(p, split_opts=True):
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--label", required=True, help="label column")
    p.add_argument("--group", required=True, help="protected-attribute column")
    p.add_argument("--features", help="comma-separated feature columns (default: all others)")
    p.add_argument("--no-normalize", dest="normalize", action="store_false",
                   help="use labels and features as given (labels must be in [0, 1])")
    if split_opts:
        p.add_argument("--train-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)


def _add_loss(p):
    p.add_argument("--loss", choices=[HALF_SQUARE, SCALED_LOGISTIC], default=HALF_SQUARE)
    p.add_argument("--C", type=float, default=5.0, help="scaled logistic steepness")


def _add_solver(p, sp: bool):
    p.add_argument("--B", type=float, default=10.0, help="dual budget")
    p.add_argument("--nu", type=float, default=1e-3, help="convergence threshold")
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--slack-constant", type=float, default=0.0)
    p.add_argument("--history-every", type=int, default=1)
    p.add_argument("--strict", action="store_true", help="exit 4 if any run fails to converge")
    if sp:
        p.add_argument("--N", type=int, default=40, help="grid size")
        p.add_argument("--oracle", choices=sorted(ORACLES), default="ls")


def _load(args) -> Dataset:
    feats = None if args.features is None else tuple(c.strip() for c in args.features.split(","))
    return load_csv(args.data, DataSchema(args.label, args.group, feats, args.normalize))


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _sp_config(args, eps) -> SPConfig:
    return SPConfig(eps_hat=eps, B=args.B, nu=args.nu, N=args.N, max_iters=args.max_iters,
                    oracle_kind=args.oracle, slack_constant=args.slack_constant,
                    history_every=args.history_every)


def _bgl_config(args, zeta) -> BGLConfig:
    return BGLConfig(zeta_hat=zeta, B=args.B, nu=args.nu, max_iters=args.max_iters, loss=_spec(args),
                     slack_constant=args.slack_constant, history_every=args.history_every)


def cmd_synth(args) -> int:
    ds = synth_generate(n=args.n, d=args.d, group_weights=args.group_weights,
                        mean_shift=args.mean_shift, noise_sd=args.noise_sd, seed=args.seed)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(ds.feature_names) + ["group", "label"])
        for x, a, y in ds.examples():
            w.writerow([repr(float(v)) for v in x] + [ds.group_names[a], repr(y)])
    return EXIT_OK


def cmd_train_sp(args) -> int:
    ds = _load(args)
    cfg = _sp_config(args, args.eps)
    spec = _spec(args)
    problem = DiscretizedProblem.build(ds, spec, cfg.N)
    res = run_sp(problem, cfg, make_oracle(cfg.oracle_kind, problem))
    meta = {"solver": "sp", "config": cfg.to_dict(), "loss": spec.kind, "C": spec.C}
    if args.out_model:
        save_model(args.out_model, res.q_hat, meta)
    if args.history:
        write_history_jsonl(args.history, res.history)
    _emit({
        "converged": res.converged, "iterations": res.iterations,
        "nu_bar": res.nu_bar, "nu_under": res.nu_under,
        "loss": overall_loss(ds, spec, res.q_hat),
        "disparity": sp_disparity(ds, problem.grid, res.q_hat),
        "atoms": len(res.q_hat.atoms),
    })
    return EXIT_NOT_CONVERGED if args.strict and not res.converged else EXIT_OK


def cmd_train_bgl(args) -> int:
    ds = _load(args)
    cfg = _bgl_config(args, args.zeta)
    res = run_bgl(ds, cfg)
    if args.history:
        write_history_jsonl(args.history, res.history)
    summary = {
        "converged": res.converged, "iterations": res.iterations, "infeasible": res.infeasible,
        "nu_bar": res.nu_bar, "nu_under": res.nu_under,
        "loss": res.loss, "group_losses": [float(v) for v in res.group_losses],
    }
    _emit(summary)
    if res.infeasible:
        return EXIT_INFEASIBLE
    if args.out_model:
        save_model(args.out_model, res.q_hat, {"solver": "bgl", "config": cfg.to_dict()})
    return EXIT_NOT_CONVERGED if args.strict and not res.converged else EXIT_OK


def _write_sweep(args, config: dict, points) -> None:
    os.makedirs(args.out_dir, exist_ok=True)
    front = pareto_front(points)
    write_points_csv(os.path.join(args.out_dir, "results.csv"), points)
    write_results_json(os.path.join(args.out_dir, "results.json"), config, points, front)
    for i, p in enumerate(points):
        write_history_jsonl(os.path.join(args.out_dir, f"history_{i:03d}.jsonl"), p.history, eps=p.eps)


def cmd_sweep_sp(args) -> int:
    ds = _load(args)
    train, test = split(ds, args.train_fraction, args.seed)
    cfg = _sp_config(args, 1.0)
    spec = _spec(args)
    points = sweep_sp(train, test, args.eps_grid, cfg, spec=spec, jobs=args.jobs)
    config = {**cfg.to_dict(), "eps_grid": list(args.eps_grid), "loss": spec.kind, "C": spec.C,
              "seed": args.seed, "train_fraction": args.train_fraction, "solver": "sp"}
    config.pop("eps_hat")
    _write_sweep(args, config, points)
    if any(p.status == "error" for p in points):
        logger.warning("%d sweep point(s) failed", sum(p.status == "error" for p in points))
    return EXIT_NOT_CONVERGED if args.strict and not all(p.converged for p in points) else EXIT_OK


def cmd_sweep_bgl(args) -> int:
    ds = _load(args)
    train, test = split(ds, args.train_fraction, args.seed)
    cfg = _bgl_config(args, 1.0)
    points = sweep_bgl(train, test, args.zeta_grid, cfg, jobs=args.jobs, group=args.zeta_group)
    config = {**cfg.to_dict(), "zeta_grid": list(args.zeta_grid), "zeta_group": args.zeta_group,
              "seed": args.seed, "train_fraction": args.train_fraction, "solver": "bgl"}
    config.pop("zeta_hat")
    _write_sweep(args, config, points)
    return EXIT_NOT_CONVERGED if args.strict and not all(p.converged for p in points) else EXIT_OK


def cmd_baseline(args) -> int:
    ds = _load(args)
    train, test = split(ds, args.train_fraction, args.seed)
    spec = _spec(args)
    model = fit_seo(train) if args.kind == "seo" else fit_unconstrained(train, spec)
    grid = build_grid(args.N)
    if args.out_model:
        save_model(args.out_model, model, {"solver": args.kind, "loss": spec.kind, "C": spec.C})
    _emit({
        "kind": args.kind,
        "train_loss": overall_loss(train, spec, model), "test_loss": overall_loss(test, spec, model),
        "train_disp": sp_disparity(train, grid, model), "test_disp": sp_disparity(test, grid, model),
    })
    return EXIT_OK


def cmd_audit(args) -> int:
    ds = _load(args)
    q = load_model(args.model)
    if q.atoms[0][1].n_features != ds.n_features:
        raise DataError(f"model expects {q.atoms[0][1].n_features} features, data has {ds.n_features}")
    spec = _spec(args)
    grid = build_grid(args.N)
    _emit({
        "n": ds.n, "group_names": list(ds.group_names),
        "loss": overall_loss(ds, spec, q),
        "sp_disparity": sp_disparity(ds, grid, q),
        "group_losses": [float(v) for v in bgl_group_losses(ds, spec, q)],
    })
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairreg", description="Fair regression under SP and BGL constraints.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic dataset to CSV")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--group-weights", type=_floats, default=[0.5, 0.5])
    p.add_argument("--mean-shift", type=float, default=1.0)
    p.add_argument("--noise-sd", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train-sp", help="fit under statistical parity")
    _add_data(p, split_opts=False)
    _add_loss(p)
    _add_solver(p, sp=True)
    p.add_argument("--eps", type=_slack, default=0.05, help="slack, or one per group")
    p.add_argument("--out-model")
    p.add_argument("--history")
    p.set_defaults(func=cmd_train_sp)

    p = sub.add_parser("train-bgl", help="fit under bounded group loss")
    _add_data(p, split_opts=False)
    _add_loss(p)
    _add_solver(p, sp=False)
    p.add_argument("--zeta", type=_slack, default=1.0, help="loss bound, or one per group")
    p.add_argument("--out-model")
    p.add_argument("--history")
    p.set_defaults(func=cmd_train_bgl)

    for name, sp in (("sweep-sp", True), ("sweep-bgl", False)):
        p = sub.add_parser(name, help=f"slack sweep ({'SP' if sp else 'BGL'})")
        _add_data(p)
        _add_loss(p)
        _add_solver(p, sp=sp)
        if sp:
            p.add_argument("--eps-grid", type=_floats, default=list(DEFAULT_EPS_GRID))
        else:
            p.add_argument("--zeta-grid", type=_floats, required=True)
            p.add_argument("--zeta-group", type=int, help="bound only this group id (others vacuous)")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        p.add_argument("--out-dir", required=True)
        p.set_defaults(func=cmd_sweep_sp if sp else cmd_sweep_bgl)

    p = sub.add_parser("baseline", help="unconstrained or SEO fit")
    _add_data(p)
    _add_loss(p)
    p.add_argument("--kind", choices=["unconstrained", "seo"], default="unconstrained")
    p.add_argument("--N", type=int, default=40)
    p.add_argument("--out-model")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("audit", help="disparity and group losses of a stored model")
    _add_data(p, split_opts=False)
    _add_loss(p)
    p.add_argument("--model", required=True)
    p.add_argument("--N", type=int, default=40)
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DataError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # Dataset validation (labels outside [0, 1], empty groups, ...)
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
