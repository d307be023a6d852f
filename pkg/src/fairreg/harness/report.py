"""Report files: sweep CSV/JSON, iteration histories and stored models.

All files carry ``FORMAT_VERSION``; output is deterministic (no timestamps,
keys in fixed order) so identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math

from ..core import LinearModel, RandomizedPredictor
from .sweep import POINT_FIELDS, TradeoffPoint

FORMAT_VERSION = 1


def _num(v):
    """JSON-safe float: NaN and infinities become strings."""
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def write_points_csv(path, points) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(POINT_FIELDS + ("status",))
        for p in points:
            w.writerow([repr(float(p.eps)), repr(p.train_loss), repr(p.test_loss), repr(p.train_disp),
                        repr(p.test_disp), p.iters, int(p.converged), p.status])


def read_points_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [
        TradeoffPoint(
            eps=float(r["eps"]), train_loss=float(r["train_loss"]), test_loss=float(r["test_loss"]),
            train_disp=float(r["train_disp"]), test_disp=float(r["test_disp"]),
            iters=int(r["iters"]), converged=bool(int(r["converged"])), status=r.get("status", "ok"),
        )
        for r in rows
    ]


def results_document(config: dict, points, front=None) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "config": {k: _num(v) for k, v in config.items()},
        "points": [{k: _num(v) for k, v in p.to_dict().items()} for p in points],
    }
    if front is not None:
        doc["pareto_front"] = [points.index(p) for p in front]
    return doc


def write_results_json(path, config: dict, points, front=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(results_document(config, points, front), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_history_jsonl(path, history, **extra) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in history:
            fh.write(json.dumps({**extra, **{k: _num(v) for k, v in rec.items()}}, sort_keys=True) + "\n")


def model_document(q, meta: dict | None = None) -> dict:
    if isinstance(q, LinearModel):
        q = RandomizedPredictor.point_mass(q)
    return {
        "format_version": FORMAT_VERSION,
        "meta": meta or {},
        "atoms": [
            {"weight": w, "weights": [float(v) for v in f.weights], "intercept": f.intercept}
            for w, f in q.atoms
        ],
    }


def save_model(path, q, meta: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_document(q, meta), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> RandomizedPredictor:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    atoms = [(a["weight"], LinearModel(a["weights"], a["intercept"])) for a in doc["atoms"]]
    # weights were written from floats that sum to one; renormalise against rounding
    total = math.fsum(w for w, _ in atoms)
    return RandomizedPredictor(tuple((w / total, f) for w, f in atoms))
