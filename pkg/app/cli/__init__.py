from app.cli.commands import build_parser, cmd_analyze, cmd_reproduce, cmd_simulate, run_cli
from app.cli.formats import ConfigFile, load_config, parse_run, read_run, serialize_run, write_run

__all__ = [
    "build_parser",
    "cmd_analyze",
    "cmd_reproduce",
    "cmd_simulate",
    "run_cli",
    "ConfigFile",
    "load_config",
    "parse_run",
    "read_run",
    "serialize_run",
    "write_run",
]
