"""Data ingestion, sweeps, reports and the command-line interface."""

from .data import DataError, DataSchema, load_csv, split, synth_generate
from .report import FORMAT_VERSION, load_model, save_model
from .sweep import DEFAULT_EPS_GRID, TradeoffPoint, pareto_front, sweep_bgl, sweep_sp

__all__ = [
    "DataError", "DataSchema", "load_csv", "split", "synth_generate",
    "FORMAT_VERSION", "load_model", "save_model",
    "DEFAULT_EPS_GRID", "TradeoffPoint", "pareto_front", "sweep_bgl", "sweep_sp",
]
