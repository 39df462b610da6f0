"""Experiment configuration, orchestration and the command-line entry point."""

from .config import CONFIG_SCHEMA, KINDS, ConfigError, ExperimentConfig, schema_json
from .runner import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, EXIT_VIOLATION, RunOutcome, run, sweep

__all__ = [
    "CONFIG_SCHEMA", "KINDS", "ConfigError", "ExperimentConfig", "schema_json",
    "EXIT_CONFIG", "EXIT_FAILURE", "EXIT_OK", "EXIT_VIOLATION", "RunOutcome", "run", "sweep",
]
