"""Core package: settings, run configuration, errors and the CLI."""

from .config import (
    AnalysisConfig,
    BoundaryConfig,
    GridConfig,
    OutputConfig,
    RunConfig,
    Settings,
    SolverConfig,
    SyntheticConfig,
    config_hash,
    configure_logging,
    ensure_directories,
    load_run_config,
    load_settings,
    run_config_from_dict,
    set_global_seed,
)

__all__ = [
    "AnalysisConfig",
    "BoundaryConfig",
    "GridConfig",
    "OutputConfig",
    "RunConfig",
    "Settings",
    "SolverConfig",
    "SyntheticConfig",
    "config_hash",
    "configure_logging",
    "ensure_directories",
    "load_run_config",
    "load_settings",
    "run_config_from_dict",
    "set_global_seed",
]
