"""Experiment configs, sweeps, slope fits, charts and the ``semr`` CLI."""
from .config import ExperimentConfig, load_config, parse_config, serialize_config
from .slope import SlopeFit, fit_slope
from .svg import emit_svg
from .sweep import read_csv, rows_to_csv, run_sweep

__all__ = [
    "ExperimentConfig", "SlopeFit", "emit_svg", "fit_slope", "load_config", "parse_config",
    "read_csv", "rows_to_csv", "run_sweep", "serialize_config",
]
