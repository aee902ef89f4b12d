"""Trial rows, CSV/JSON emission, and summary aggregation.

The CSV schema is fixed so downstream tooling can diff runs: one row per
trial, identical header order everywhere, and purely value-determined
formatting so that rerunning a scenario with the same config and seed
reproduces the file byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CSV_HEADER = [
    "scenario",
    "trial",
    "seed",
    "D",
    "M",
    "epsilon",
    "delta",
    "mode",
    "copies_consumed",
    "copies_predicted",
    "max_error",
    "success",
    "iterations",
]


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "True" if value else "False"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


@dataclass(frozen=True)
class TrialRow:
    scenario: str
    trial: int
    seed: int
    d: int
    m: int
    epsilon: float
    delta: float
    mode: str
    copies_consumed: int
    copies_predicted: int
    max_error: float
    success: bool
    iterations: int

    def as_csv_values(self) -> list[str]:
        return [
            self.scenario,
            _fmt(self.trial),
            _fmt(self.seed),
            _fmt(self.d),
            _fmt(self.m),
            _fmt(self.epsilon),
            _fmt(self.delta),
            self.mode,
            _fmt(self.copies_consumed),
            _fmt(self.copies_predicted),
            _fmt(self.max_error),
            _fmt(self.success),
            _fmt(self.iterations),
        ]


def csv_text(rows: list[TrialRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.as_csv_values())
    return buf.getvalue()


def write_csv(path: str | Path, rows: list[TrialRow]) -> Path:
    path = Path(path)
    path.write_text(csv_text(rows), encoding="utf-8")
    return path


def _jsonify(value):
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, default=_jsonify) + "\n", encoding="utf-8")
    return path


def success_rate(rows: list[TrialRow]) -> float:
    if not rows:
        return 0.0
    return sum(1 for r in rows if r.success) / len(rows)


def aggregate(rows: list[TrialRow]) -> dict:
    """Aggregates of the per-row fields, mirroring the CSV schema."""
    if not rows:
        return {
            "trials": 0,
            "successes": 0,
            "success_rate": 0.0,
            "copies_consumed_total": 0,
            "copies_consumed_mean": 0.0,
            "copies_predicted_max": 0,
            "within_predicted_rate": 1.0,
            "max_error_max": 0.0,
            "max_error_mean": 0.0,
            "iterations_max": 0,
            "iterations_mean": 0.0,
        }
    consumed = [r.copies_consumed for r in rows]
    errors = [r.max_error for r in rows]
    iters = [r.iterations for r in rows]
    within = [r.copies_consumed <= r.copies_predicted for r in rows]
    return {
        "trials": len(rows),
        "successes": sum(1 for r in rows if r.success),
        "success_rate": success_rate(rows),
        "copies_consumed_total": int(sum(consumed)),
        "copies_consumed_mean": float(np.mean(consumed)),
        "copies_predicted_max": int(max(r.copies_predicted for r in rows)),
        "within_predicted_rate": float(np.mean(within)),
        "max_error_max": float(max(errors)),
        "max_error_mean": float(np.mean(errors)),
        "iterations_max": int(max(iters)),
        "iterations_mean": float(np.mean(iters)),
    }
