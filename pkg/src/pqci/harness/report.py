"""Report container and its text / JSON / CSV renderings."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from importlib import resources

from pqci import __version__

SCHEMA_VERSION = 1


@dataclass
class Report:
    command: str
    config: dict
    results: dict
    ok: bool = True
    timing: dict = field(default_factory=dict)
    include_timing: bool = False
    csv_rows: list = field(default_factory=list)
    text_lines: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "version": __version__,
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "ok": self.ok,
        }
        if self.include_timing:
            d["timing"] = self.timing
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.csv_rows:
            columns = list(self.csv_rows[0])
            writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
            writer.writeheader()
            writer.writerows(self.csv_rows)
        return buf.getvalue()

    def to_text(self) -> str:
        head = [f"pqci {self.command}  (seed={self.config.get('seed')}, t={self.config.get('t')})"]
        tail = []
        if self.timing:
            tail.append("wall time: " + ", ".join(f"{k}={v:.3f}s" for k, v in self.timing.items()))
        tail.append("status: " + ("OK" if self.ok else "FAIL"))
        return "\n".join(head + self.text_lines + tail) + "\n"

    def render(self, fmt: str) -> str:
        return {"text": self.to_text, "json": self.to_json, "csv": self.to_csv}[fmt]()


def load_schema() -> dict:
    text = resources.files("pqci.harness").joinpath("schemas/report.schema.json").read_text()
    return json.loads(text)
