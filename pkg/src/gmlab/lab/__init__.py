"""Experiment drivers: configs, sweeps, Monte Carlo, and serialization."""

from .config import config_hash, load_config, parse_config
from .emit import Table, emit_results, write_csv
from .montecarlo import McResult, mc_crb_check
from .sweeps import SweepResult, run_sweep

__all__ = [
    "McResult",
    "SweepResult",
    "Table",
    "config_hash",
    "emit_results",
    "load_config",
    "mc_crb_check",
    "parse_config",
    "run_sweep",
    "write_csv",
]
