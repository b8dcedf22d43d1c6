"""Entries of the billiard flow into shrinking target balls and their marks.

Each visit of the flow to a ball B(q_j, r_j*eps) x S^1 yields one event
carrying the full mark: entry time, target label, normalized entry offset,
entry velocity, exact sojourn duration (reflections inside the ball
included) and closest approach to the ball center.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import (PhasePoint, Table, TorusPoint, UnitVector, _cell_distance,
                   _copy_offsets, sample_mu, trajectory_rng)
from .errors import GrazingCollision, HorizonViolated, OverlappingTargets

log = logging.getLogger(__name__)

INTERIOR = "interior"
BOUNDARY = "boundary"

EVENT_DTYPE = np.dtype([
    ("t", np.float64), ("j", np.int32),
    ("px", np.float64), ("py", np.float64),
    ("ux", np.float64), ("uy", np.float64),
    ("duration", np.float64), ("closest", np.float64),
    ("phi_in", np.float64),
])

BATCH_EVENT_DTYPE = np.dtype([("traj", np.int64)] + [
    (name, EVENT_DTYPE[name]) for name in EVENT_DTYPE.names])


@dataclass(frozen=True)
class Target:
    """Ball target B(center, shape_radius * eps) x S^1.

    kind is "interior" (ball never meets the obstacle boundary; weight 2 in
    all intensity formulas) or "boundary" (center on the named obstacle
    circle; weight 1).
    """

    label: int
    center: TorusPoint
    shape_radius: float
    kind: str = INTERIOR
    obstacle_id: int | None = None
    inward_normal: UnitVector | None = field(default=None)

    def __post_init__(self):
        if self.shape_radius <= 0.0:
            raise ValueError("shape_radius must be positive")
        if self.kind not in (INTERIOR, BOUNDARY):
            raise ValueError(f"unknown target kind {self.kind!r}")
        if self.kind == BOUNDARY and self.obstacle_id is None:
            raise ValueError("boundary target needs obstacle_id")

    @property
    def weight(self) -> int:
        """Intensity weight: 2 for interior targets, 1 for boundary ones."""
        return 1 if self.kind == BOUNDARY else 2


def boundary_target(label: int, table: Table, obstacle_id: int, angle: float,
                    shape_radius: float = 1.0) -> Target:
    """Target centered on obstacle `obstacle_id` at boundary angle `angle`."""
    o = table.obstacles[obstacle_id]
    cx = o.center.x + o.radius * math.cos(angle)
    cy = o.center.y + o.radius * math.sin(angle)
    normal = UnitVector(math.cos(angle), math.sin(angle))
    return Target(label, TorusPoint(cx, cy), shape_radius, BOUNDARY,
                  obstacle_id, normal)


def target_normal(table: Table, target: Target) -> UnitVector | None:
    """Inward normal at a boundary target center (None for interior)."""
    if target.kind == INTERIOR:
        return None
    if target.inward_normal is not None:
        return target.inward_normal
    o = table.obstacles[target.obstacle_id]
    dx = _wrapd(target.center.x - o.center.x)
    dy = _wrapd(target.center.y - o.center.y)
    return UnitVector(dx / o.radius, dy / o.radius)


def _wrapd(d: float) -> float:
    return d - math.floor(d + 0.5)


def validate_targets(table: Table, targets: list[Target], eps_max: float) -> None:
    """Margins and disjointness required for entry detection at scale eps_max."""
    labels = [t.label for t in targets]
    if len(set(labels)) != len(labels):
        raise ValueError("target labels must be distinct")
    for t in targets:
        rho = t.shape_radius * eps_max
        if t.kind == INTERIOR:
            clr = table.min_obstacle_clearance(t.center)
            if clr <= rho:
                raise ValueError(
                    f"interior target {t.label} clearance {clr:.4g} <= "
                    f"r_j*eps_max {rho:.4g}")
        else:
            o = table.obstacles[t.obstacle_id]
            if abs(t.center.dist(o.center) - o.radius) > 1e-12:
                raise ValueError(
                    f"boundary target {t.label} center is not on obstacle "
                    f"{t.obstacle_id}")
            for i, other in enumerate(table.obstacles):
                if i != t.obstacle_id and \
                        t.center.dist(other.center) - other.radius <= rho:
                    raise ValueError(
                        f"boundary target {t.label} ball reaches obstacle {i}")
    for i, a in enumerate(targets):
        for b in targets[i + 1:]:
            if a.center.dist(b.center) <= (a.shape_radius + b.shape_radius) * eps_max:
                raise OverlappingTargets(
                    f"targets {a.label} and {b.label} overlap at eps {eps_max}")


@dataclass(frozen=True)
class EntryEvent:
    t: float
    j: int
    p: UnitVector          # normalized entry offset (q' - q_j) / (r_j eps)
    u: UnitVector          # velocity at entry
    duration: float        # flow time spent in the ball this visit
    closest: float         # min distance to q_j during the visit
    phi_in: float          # signed angle between -p and u

    @classmethod
    def from_row(cls, row) -> "EntryEvent":
        return cls(float(row["t"]), int(row["j"]),
                   UnitVector(float(row["px"]), float(row["py"])),
                   UnitVector(float(row["ux"]), float(row["uy"])),
                   float(row["duration"]), float(row["closest"]),
                   float(row["phi_in"]))


class TargetGeometry:
    """Precomputed copy arrays for a target list at one eps, kernel-ready."""

    def __init__(self, table: Table, targets: list[Target], eps: float):
        validate_targets(table, targets, eps)
        self.table = table
        self.targets = list(targets)
        self.eps = eps
        order = sorted(range(len(targets)), key=lambda k: targets[k].label)
        self.ordered = [targets[k] for k in order]
        self.trho = np.array([t.shape_radius * eps for t in self.ordered])
        offx, offy = _copy_offsets(table.margin)
        reach = table.free_path_bound + 1e-9
        cx, cy, cj = [], [], []
        for idx, t in enumerate(self.ordered):
            rho = self.trho[idx]
            for dx, dy in zip(offx, offy):
                px, py = t.center.x + dx, t.center.y + dy
                if _cell_distance(px, py) <= reach + rho:
                    cx.append(px)
                    cy.append(py)
                    cj.append(idx)
        self.tcx = np.asarray(cx)
        self.tcy = np.asarray(cy)
        self.tcj = np.asarray(cj, dtype=np.int64)
        self.labels = np.array([t.label for t in self.ordered], dtype=np.int64)

    def label_of(self, idx: np.ndarray) -> np.ndarray:
        return self.labels[idx]


def _run_one(geom: TargetGeometry, x, y, vx, vy, t_max,
             stop_when_all_labels=False, cap=None) -> np.ndarray:
    """Run one trajectory, growing the event buffer on overflow."""
    table = geom.table
    if cap is None:
        cap = 256
    max_segments = int(t_max * 2000.0) + 10_000
    while True:
        ev_t = np.empty(cap)
        ev_j = np.empty(cap, dtype=np.int32)
        ev_px = np.empty(cap)
        ev_py = np.empty(cap)
        ev_ux = np.empty(cap)
        ev_uy = np.empty(cap)
        ev_dur = np.empty(cap)
        ev_clo = np.empty(cap)
        ev_phi = np.empty(cap)
        n, status, _ncol, _t, _mf = _kernels.run_entries(
            x, y, vx, vy, t_max,
            table._ocx, table._ocy, table._ocr,
            geom.tcx, geom.tcy, geom.tcj, geom.trho,
            table.free_path_bound, stop_when_all_labels, max_segments,
            ev_t, ev_j, ev_px, ev_py, ev_ux, ev_uy, ev_dur, ev_clo, ev_phi)
        if status == _kernels.STATUS_OVERFLOW:
            cap *= 4
            continue
        if status == _kernels.STATUS_HORIZON:
            raise HorizonViolated("flight exceeded free_path_bound")
        if status in (_kernels.STATUS_GRAZING, _kernels.STATUS_STUCK):
            raise GrazingCollision(f"trajectory aborted with status {status}")
        out = np.empty(n, dtype=EVENT_DTYPE)
        out["t"] = ev_t[:n]
        out["j"] = geom.label_of(ev_j[:n])
        out["px"] = ev_px[:n]
        out["py"] = ev_py[:n]
        out["ux"] = ev_ux[:n]
        out["uy"] = ev_uy[:n]
        out["duration"] = ev_dur[:n]
        out["closest"] = ev_clo[:n]
        out["phi_in"] = ev_phi[:n]
        return out


def detect_entries(table: Table, targets: list[Target], eps: float,
                   p0: PhasePoint, t_max: float) -> list[EntryEvent]:
    """All ball entries along the trajectory from p0, ordered by entry time."""
    geom = TargetGeometry(table, targets, eps)
    rows = _run_one(geom, p0.q.x, p0.q.y, p0.v.ux, p0.v.uy, t_max)
    return [EntryEvent.from_row(r) for r in rows]


@dataclass
class BatchResult:
    """Merged entry events of a trajectory batch."""

    events: np.ndarray            # BATCH_EVENT_DTYPE, sorted by (traj, t)
    n_trajectories: int
    t_max: float
    eps: float
    discarded: list[int]          # trajectory indices aborted on grazing

    @property
    def total_time(self) -> float:
        return (self.n_trajectories - len(self.discarded)) * self.t_max

    def per_trajectory(self):
        for k in range(self.n_trajectories):
            if k in self.discarded:
                continue
            yield k, self.events[self.events["traj"] == k]


def run_batch(table: Table, targets: list[Target], eps: float,
              n_trajectories: int, t_max: float, master_seed: int,
              workers: int = 1, stop_when_all_labels: bool = False) -> BatchResult:
    """Simulate n independent mu-started trajectories and merge their events.

    Each trajectory owns the RNG substream (master_seed, index), so results
    are bit-identical for any worker count.
    """
    geom = TargetGeometry(table, targets, eps)
    starts = [sample_mu(table, trajectory_rng(master_seed, k))
              for k in range(n_trajectories)]

    def work(k: int):
        p = starts[k]
        try:
            return _run_one(geom, p.q.x, p.q.y, p.v.ux, p.v.uy, t_max,
                            stop_when_all_labels=stop_when_all_labels)
        except GrazingCollision:
            return None

    if workers <= 1:
        results = [work(k) for k in range(n_trajectories)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, range(n_trajectories)))

    discarded = [k for k, r in enumerate(results) if r is None]
    if discarded:
        log.warning("discarded %d grazing trajectories: %s",
                    len(discarded), discarded)
    chunks = []
    for k, r in enumerate(results):
        if r is None:
            continue
        rows = np.empty(r.size, dtype=BATCH_EVENT_DTYPE)
        rows["traj"] = k
        for name in EVENT_DTYPE.names:
            rows[name] = r[name]
        chunks.append(rows)
    events = (np.concatenate(chunks) if chunks
              else np.empty(0, dtype=BATCH_EVENT_DTYPE))
    return BatchResult(events, n_trajectories, t_max, eps, discarded)


@dataclass(frozen=True)
class RateEstimate:
    rate: float                  # entries per unit flow time
    stderr: float
    n_events: int
    total_time: float


def entry_rate(table: Table, target: Target, eps: float, n_samples: int,
               t_max: float, master_seed: int = 0, workers: int = 1) -> RateEstimate:
    """Monte Carlo entry rate per unit flow time, with its standard error.

    The standard error comes from the spread of per-trajectory counts, so it
    is honest about within-trajectory correlations.
    """
    batch = run_batch(table, [target], eps, n_samples, t_max, master_seed,
                      workers=workers)
    counts = np.zeros(n_samples)
    idx = np.ones(n_samples, dtype=bool)
    for k in batch.discarded:
        idx[k] = False
    trajs, per = np.unique(batch.events["traj"], return_counts=True)
    counts[trajs] = per
    counts = counts[idx]
    n_used = counts.size
    rate = counts.mean() / t_max
    stderr = counts.std(ddof=1) / math.sqrt(n_used) / t_max if n_used > 1 else math.inf
    return RateEstimate(rate, stderr, int(counts.sum()), n_used * t_max)
