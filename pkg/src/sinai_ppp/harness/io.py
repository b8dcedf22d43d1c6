"""Deterministic CSV/JSON writers for experiment outputs.

Floats are written with repr (shortest round-trip decimal), rows in a fixed
order, so identical (config, master_seed) produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..stats import TestReport

ENTRIES_HEADER = "eps,traj_id,t,j,p_angle,u_angle,duration,closest"
COUNTS_HEADER = "eps,traj_id,window_id,label,count"
TRIALS_HEADER = "eps,trial,m_count,m_swap,truncated,local_time"


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_entries_csv(path: Path, batches: list[tuple[float, np.ndarray]]) -> None:
    """batches: [(eps, events)] with events in the batch dtype (traj, t, ...)."""
    lines = [ENTRIES_HEADER]
    for eps, ev in batches:
        for row in ev:
            p_angle = math.atan2(row["py"], row["px"])
            u_angle = math.atan2(row["uy"], row["ux"])
            lines.append(",".join(_fmt(v) for v in (
                eps, row["traj"], row["t"], row["j"], p_angle, u_angle,
                row["duration"], row["closest"])))
    Path(path).write_text("\n".join(lines) + "\n")


def write_counts_csv(path: Path, rows) -> None:
    """rows: iterable of (eps, traj_id, window_id, label, count)."""
    lines = [COUNTS_HEADER]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def write_trials_csv(path: Path, rows) -> None:
    """rows: iterable of (eps, trial, m_count, m_swap, truncated, local_time)."""
    lines = [TRIALS_HEADER]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def write_reports_json(path: Path, reports: list[TestReport]) -> None:
    payload = [r.to_dict() for r in reports]
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def write_json(path: Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_reports_json(path: Path) -> list[TestReport]:
    data = json.loads(Path(path).read_text())
    return [TestReport(**d) for d in data]
