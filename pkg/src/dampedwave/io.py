"""Trajectory tables, JSON reports and run manifests."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, is_dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .functionals import Trajectory, TrajectoryRecord

__all__ = [
    "CSV_COLUMNS",
    "write_trajectory",
    "read_trajectory",
    "write_json",
    "to_jsonable",
    "RunManifest",
]

CSV_COLUMNS = ("t", "E", "D", "F", "lp", "lq", "Eeps")


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return "%.17g" % x


def write_trajectory(records, path) -> Path:
    """CSV with a fixed header ``t,E,D,F,lp,lq,Eeps``; absent values are empty cells."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in records:
            fh.write(",".join(_fmt(getattr(r, c)) for c in CSV_COLUMNS) + "\n")
    return path


def read_trajectory(path) -> Trajectory:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty trajectory file") from None
        missing = [c for c in ("t", "E") if c not in header]
        if missing:
            raise ValueError(f"{path}: missing column {missing[0]!r}")
        unknown = [c for c in header if c not in CSV_COLUMNS]
        if unknown:
            raise ValueError(f"{path}: unknown column {unknown[0]!r}")
        traj = Trajectory()
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            vals = {}
            for name, cell in zip(header, row):
                try:
                    vals[name] = float(cell) if cell != "" else None
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: column {name}: not a number: {cell!r}") from None
            vals.setdefault("D", None)
            if vals["t"] is None or vals["E"] is None:
                raise ValueError(f"{path}:{lineno}: t and E must be present")
            traj.append(TrajectoryRecord(**vals))
    return traj


def to_jsonable(obj):
    """Dataclasses, Fractions and numpy values to plain JSON types."""
    if hasattr(obj, "to_json"):
        return to_jsonable(obj.to_json())
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: to_jsonable(v) for k, v in asdict(obj).items() if not isinstance(v, np.ndarray)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


@dataclass
class RunManifest:
    digest: str
    seed: int | None
    version: str
    started: str
    finished: str = ""
    outputs: dict = field(default_factory=dict)
    exit_status: int = 0

    def write(self, path) -> Path:
        return write_json(asdict(self), path)
