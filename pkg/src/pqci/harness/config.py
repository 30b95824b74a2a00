"""Run configuration: CLI flags over a flat key=value file over defaults."""

from __future__ import annotations

import secrets
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from pqci.geometry import Circle, GeometryError, ProblemParams

COMMANDS = ("decide", "verify", "attack", "cost", "trace")
FORMATS = ("text", "json", "csv")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    t: int = 2
    alice: Circle = field(default_factory=lambda: Circle(1, 1, 1))
    bob: Circle = field(default_factory=lambda: Circle(2, 2, 1))
    alice2: Circle | None = None
    strategy: str = "direct-measure-one"
    trials: int = 10_000
    decoys: int = 1
    shots: int = 1000
    pairs: int | None = None
    exhaustive: bool = False
    t_list: tuple[int, ...] = (4, 8, 16)
    seed: int | None = None
    format: str = "text"
    out: str | None = None
    workers: int = 1
    timing: bool = False

    def __post_init__(self):
        if self.seed is None:
            self.seed = secrets.randbelow(2**32)

    @property
    def params(self) -> ProblemParams:
        return ProblemParams(self.t)

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {', '.join(FORMATS)}")
        try:
            params = self.params
            if self.command in ("decide", "attack", "trace"):
                self.alice.validate(params)
                self.bob.validate(params)
                if self.alice2 is not None:
                    self.alice2.validate(params)
            if self.command == "cost":
                for t in self.t_list:
                    ProblemParams(t)
        except GeometryError as exc:
            raise ConfigError(str(exc)) from None
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.decoys < 1:
            raise ConfigError("decoys must be >= 1")
        if self.pairs is not None and self.pairs < 1:
            raise ConfigError("pairs must be >= 1")
        if self.command == "trace" and self.t > 3:
            raise ConfigError("trace output is limited to t <= 3")
        return self

    def echo(self) -> dict:
        """JSON-friendly copy of every field, enough to re-run the report."""
        d = asdict(self)
        for key in ("alice", "bob", "alice2"):
            d[key] = None if getattr(self, key) is None else str(getattr(self, key))
        d["t_list"] = list(self.t_list)
        return d


def _coerce(name: str, raw):
    if raw is None:
        return None
    if name in ("alice", "bob", "alice2"):
        return raw if isinstance(raw, Circle) else Circle.parse(str(raw))
    if name == "t_list":
        if isinstance(raw, (list, tuple)):
            return tuple(int(v) for v in raw)
        return tuple(int(v) for v in str(raw).replace(",", " ").split())
    if name in ("t", "trials", "decoys", "shots", "pairs", "seed", "workers"):
        return int(raw)
    if name in ("exhaustive", "timing"):
        if isinstance(raw, bool):
            return raw
        return str(raw).strip().lower() in ("1", "true", "yes", "on")
    return str(raw)


def read_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines; keys use flag names, ``-`` or ``_`` alike."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def build_config(command: str, flags: dict, config_path: str | None = None) -> RunConfig:
    """Merge flags (those not None) over the config file over defaults."""
    known = {f.name for f in fields(RunConfig)} - {"command"}
    merged = {}
    if config_path:
        for key, value in read_config_file(config_path).items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = value
    merged.update({k: v for k, v in flags.items() if v is not None and k in known})
    try:
        values = {k: _coerce(k, v) for k, v in merged.items()}
    except (ValueError, GeometryError) as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(command=command, **values).validate()
