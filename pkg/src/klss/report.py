"""Deterministic CSV/JSON result tables."""

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


def _plain(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        value = float(value)
    if isinstance(value, float):
        # shortest round-trip digits, never exponent notation
        return np.format_float_positional(value, trim="-")
    if hasattr(value, "item"):  # numpy scalar
        return _plain(value.item())
    return str(value)


def _json_value(value):
    if isinstance(value, Fraction):
        return float(value)
    if hasattr(value, "item"):
        return value.item()
    return value


def config_digest(config):
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class ExperimentResult:
    name: str
    config: dict
    columns: list
    rows: list = field(default_factory=list)
    seed: int | None = None
    notes: list = field(default_factory=list)

    @property
    def digest(self):
        return config_digest({"command": self.name, "seed": self.seed, **self.config})

    def add(self, **row):
        unknown = set(row) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown columns {sorted(unknown)}")
        self.rows.append(row)

    def to_csv(self):
        buf = io.StringIO()
        buf.write(f"# command: {self.name}\n")
        buf.write(f"# config: {json.dumps(self.config, sort_keys=True, default=str)}\n")
        buf.write(f"# seed: {'' if self.seed is None else self.seed}\n")
        buf.write(f"# config_digest: {self.digest}\n")
        for note in self.notes:
            buf.write(f"# note: {note}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_plain(row.get(c)) for c in self.columns])
        return buf.getvalue()

    def to_json(self):
        doc = {
            "command": self.name,
            "config": self.config,
            "seed": self.seed,
            "config_digest": self.digest,
            "notes": self.notes,
            "columns": self.columns,
            "rows": [{c: _json_value(r.get(c)) for c in self.columns} for r in self.rows],
        }
        return json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"
