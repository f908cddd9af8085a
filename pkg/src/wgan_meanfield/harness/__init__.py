"""Configuration, experiment drivers and the command-line interface."""

from .config import ConfigError, RunConfig, load_config, parse_config
from .experiments import run
from .fit import RateFit, fit_rate

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "run", "RateFit", "fit_rate"]
