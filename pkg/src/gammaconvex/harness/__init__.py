"""Config parsing, fixtures and the command-line runner."""
from .config import COMMANDS, ExperimentConfig, parse_config, serialize
from .fixtures import graph_fixture, region_fixture, shipped_configs
