"""Marked point sets and the functionals extracted from them.

A MarkedPointSet is a finite realization of a point process on
[0, inf) x V: strictly increasing times with one mark each.  Marks are
stored as a numpy array (labels, reals, or rows of reals) so the
functionals stay vectorized.  All operations are pure.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .targets import EntryEvent

log = logging.getLogger(__name__)

MIN = "min"
MAX = "max"


@dataclass(frozen=True)
class ScaledClock:
    """Time normalization h_eps and duration normalization a_eps."""

    h_eps: float
    a_eps: float = 1.0

    def __post_init__(self):
        if self.h_eps <= 0.0 or self.a_eps <= 0.0:
            raise ValueError("clock normalizations must be positive")


@dataclass(frozen=True)
class MarkedPointSet:
    times: np.ndarray
    marks: np.ndarray
    tie_adjusted: bool = False

    def __post_init__(self):
        if self.times.ndim != 1 or len(self.times) != len(self.marks):
            raise ValueError("times and marks must be aligned 1-d sequences")

    def __len__(self) -> int:
        return self.times.size

    def window(self) -> tuple[float, float]:
        if self.times.size == 0:
            return (0.0, 0.0)
        return (float(self.times[0]), float(self.times[-1]))


def marked_point_set(times, marks) -> MarkedPointSet:
    """Build a MarkedPointSet: sort by time, break ties by nextafter nudges.

    Tie perturbation is deterministic and infinitesimal (repeated nextafter
    toward +inf); the limit laws under test are atomless, so adjusted sets
    are statistically indistinguishable.  The adjustment is flagged.
    """
    times = np.asarray(times, dtype=np.float64).copy()
    marks = np.asarray(marks)
    if times.ndim != 1 or times.size != len(marks):
        raise ValueError("times and marks must be aligned 1-d sequences")
    if not np.all(np.isfinite(times)):
        raise ValueError("times must be finite")
    if np.any(times < 0.0):
        raise ValueError("times must be nonnegative")
    order = np.argsort(times, kind="stable")
    times = times[order]
    marks = marks[order]
    adjusted = False
    for i in range(1, times.size):
        if times[i] <= times[i - 1]:
            times[i] = np.nextafter(times[i - 1], np.inf)
            adjusted = True
    if adjusted:
        log.warning("marked_point_set: tied times perturbed deterministically")
    return MarkedPointSet(times, marks, adjusted)


def build_process(entries: Iterable[EntryEvent] | np.ndarray,
                  clock: ScaledClock,
                  mark_selector: Callable) -> MarkedPointSet:
    """Point set {(t * h_eps, mark_selector(event))} over the entry events."""
    entries = list(entries) if not isinstance(entries, np.ndarray) else entries
    times = np.array([e["t"] if isinstance(e, np.void) else e.t
                      for e in entries], dtype=np.float64)
    marks = [mark_selector(e) for e in entries]
    return marked_point_set(times * clock.h_eps, np.asarray(marks))


@dataclass(frozen=True)
class HazardCount:
    """1-marks seen strictly before the first 0-mark.

    truncated means no 0-mark arrived inside the observation window; such
    trials are excluded from committor statistics.
    """

    count: int
    truncated: bool


def hazard_count(pp: MarkedPointSet) -> HazardCount:
    marks = np.asarray(pp.marks)
    if marks.size and not np.isin(marks, (0, 1)).all():
        raise ValueError("hazard_count needs {0,1} marks")
    zeros = np.flatnonzero(marks == 0)
    if zeros.size == 0:
        return HazardCount(int((marks == 1).sum()), True)
    tau0 = pp.times[zeros[0]]
    return HazardCount(int(((marks == 1) & (pp.times < tau0)).sum()), False)


@dataclass(frozen=True)
class HazardLocalTime:
    total: float
    truncated: bool


def hazard_local_time(pp: MarkedPointSet) -> HazardLocalTime:
    """Sum of scaled durations of 1-labeled points before the first 0-label.

    Marks are rows (label, scaled_duration).
    """
    marks = np.asarray(pp.marks, dtype=np.float64)
    if marks.size == 0:
        return HazardLocalTime(0.0, True)
    if marks.ndim != 2 or marks.shape[1] != 2:
        raise ValueError("hazard_local_time needs (label, duration) marks")
    labels = marks[:, 0]
    durs = marks[:, 1]
    if np.any(durs < 0.0):
        raise ValueError("durations must be nonnegative")
    zeros = np.flatnonzero(labels == 0)
    if zeros.size == 0:
        return HazardLocalTime(float(durs[labels == 1].sum()), True)
    tau0 = pp.times[zeros[0]]
    sel = (labels == 1) & (pp.times < tau0)
    return HazardLocalTime(float(durs[sel].sum()), False)


def records_extract(pp: MarkedPointSet, direction: str = MIN) -> np.ndarray:
    """Times of the record points of a real-marked point set.

    A point is a record when every earlier point has a strictly larger
    (direction "min") or strictly smaller ("max") mark; the first point is
    always a record.  Under the strict rule a repeated mark is never a new
    record, so ties need no numeric perturbation; they are only logged.
    """
    if direction not in (MIN, MAX):
        raise ValueError(f"direction must be {MIN!r} or {MAX!r}")
    marks = np.asarray(pp.marks, dtype=np.float64)
    if marks.size == 0:
        return np.empty(0)
    if np.unique(marks).size != marks.size:
        log.warning("records_extract: tied marks; strict rule keeps first only")
    vals = marks if direction == MIN else -marks
    running = np.minimum.accumulate(vals)
    is_rec = np.empty(marks.size, dtype=bool)
    is_rec[0] = True
    is_rec[1:] = vals[1:] < running[:-1]
    return pp.times[is_rec]


def line_map(entry: EntryEvent) -> tuple[float, float]:
    """Chord of the unit disk cut by an interior-ball crossing, as (r, theta).

    The entry point p on the unit circle and the unit velocity u define the
    chord {p + s u}; its signed distance r to the center and normal
    direction theta satisfy x cos(theta) + y sin(theta) = r with
    theta in [0, pi), r in [-1, 1], one representation per chord.
    """
    px, py = entry.p.ux, entry.p.uy
    ux, uy = entry.u.ux, entry.u.uy
    nx, ny = -uy, ux                # unit normal to the chord, no cancellation
    r = px * nx + py * ny           # signed distance of the chord to the center
    theta = math.atan2(ny, nx)
    if theta < 0.0:
        theta += math.pi
        r = -r
    elif theta >= math.pi:          # atan2 yields exactly pi for (-1, 0)
        theta -= math.pi
        r = -r
    return r, theta


def line_map_arrays(px, py, ux, uy):
    """Vectorized twin of line_map over coordinate arrays."""
    nx, ny = -np.asarray(uy, dtype=np.float64), np.asarray(ux, dtype=np.float64)
    r = np.asarray(px) * nx + np.asarray(py) * ny
    theta = np.arctan2(ny, nx)
    flip = theta < 0.0
    theta = np.where(flip, theta + math.pi, theta)
    r = np.where(flip, -r, r)
    high = theta >= math.pi
    theta = np.where(high, theta - math.pi, theta)
    r = np.where(high, -r, r)
    return r, theta


def count_in_window(pp: MarkedPointSet, t0: float, t1: float,
                    mark_predicate: Callable | None = None) -> int:
    """Points with time in [t0, t1) whose mark satisfies the predicate."""
    if not t0 < t1:
        raise ValueError("need t0 < t1")
    lo = np.searchsorted(pp.times, t0, side="left")
    hi = np.searchsorted(pp.times, t1, side="left")
    if mark_predicate is None:
        return int(hi - lo)
    return int(sum(bool(mark_predicate(m)) for m in pp.marks[lo:hi]))


def window_counts(pp: MarkedPointSet, t_end: float, window_len: float,
                  mark_predicate: Callable | None = None) -> np.ndarray:
    """Counts over the disjoint windows [k*w, (k+1)*w) covering [0, t_end)."""
    m = int(t_end / window_len)
    if m < 1:
        raise ValueError("window_len longer than the observation span")
    sel = np.ones(len(pp), dtype=bool)
    if mark_predicate is not None:
        sel = np.array([bool(mark_predicate(mk)) for mk in pp.marks])
    times = pp.times[sel]
    times = times[times < m * window_len]
    idx = np.floor_divide(times, window_len).astype(np.int64)
    return np.bincount(idx, minlength=m)[:m]
