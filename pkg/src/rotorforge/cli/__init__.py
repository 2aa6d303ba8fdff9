"""Command-line runner."""

from .config import ConfigError, RunConfig, parse_config
from .main import execute, main, write_outputs

__all__ = ["ConfigError", "RunConfig", "parse_config", "execute", "main", "write_outputs"]
