"""
Command line interface and run configuration.
"""

from .run_config import RunConfig, PathsConfig, load_run_config, parse_override
from .commands import main, build_parser

__all__ = ['RunConfig', 'PathsConfig', 'load_run_config', 'parse_override', 'main', 'build_parser']
