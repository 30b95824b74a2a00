from pqci.harness.commands import cmd_attack, cmd_cost, cmd_decide, cmd_trace, cmd_verify
from pqci.harness.config import ConfigError, RunConfig, build_config
from pqci.harness.report import Report, load_schema

__all__ = [
    "ConfigError",
    "Report",
    "RunConfig",
    "build_config",
    "cmd_attack",
    "cmd_cost",
    "cmd_decide",
    "cmd_trace",
    "cmd_verify",
    "load_schema",
]
