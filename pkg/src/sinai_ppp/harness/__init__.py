"""Experiment harness: configuration, runners E1-E8, CLI."""

from .config import (ExperimentConfig, default_config, load_config, validate,
                     config_from_dict, config_to_dict)
from .experiments import RUNNERS, run

__all__ = ["ExperimentConfig", "default_config", "load_config", "validate",
           "config_from_dict", "config_to_dict", "RUNNERS", "run"]
