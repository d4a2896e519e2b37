"""Machine-readable experiment reports."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..exactmath import rat_str
from .stats import Probability

REPORT_SCHEMA = "pcpkit-report/1"


def to_plain(v):
    """JSON-safe view: Fractions as "num/den" strings, arrays as lists."""
    if isinstance(v, Fraction):
        return rat_str(v)
    if isinstance(v, Probability):
        return v.to_json()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, dict):
        return {str(k): to_plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [to_plain(x) for x in v]
    if hasattr(v, "to_json"):
        return v.to_json()
    return v


@dataclass
class ExperimentReport:
    name: str
    config: dict
    seed: int
    metrics: dict = field(default_factory=dict)
    probabilities: dict = field(default_factory=dict)   # name -> Probability
    checks: dict = field(default_factory=dict)          # name -> bool
    wall_clock: float | None = None

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        out = {"schema": REPORT_SCHEMA, "name": self.name, "seed": self.seed, "config": to_plain(self.config),
               "metrics": to_plain(self.metrics), "probabilities": to_plain(self.probabilities),
               "checks": dict(self.checks), "passed": self.passed}
        if self.wall_clock is not None:
            out["wall_clock_s"] = round(self.wall_clock, 3)
        return out

    def dumps(self, fmt: str = "json") -> str:
        if fmt == "json":
            return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["key", "value"])
            for k, v in _flatten(self.to_json()):
                w.writerow([k, v])
            return buf.getvalue()
        raise ValueError(f"unknown format {fmt!r}")


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}{k}.")
    elif isinstance(obj, list):
        for i, x in enumerate(obj):
            yield from _flatten(x, f"{prefix}{i}.")
    else:
        yield prefix[:-1], obj
