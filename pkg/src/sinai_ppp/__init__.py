"""Sinai billiard flow simulator and rare-event point-process toolkit."""

from .core import (CollisionEvent, Obstacle, PhasePoint, Segment, Table,
                   TorusPoint, UnitVector, advance, check_finite_horizon,
                   default_table, flow_segments, next_collision, sample_mu)
from .targets import (EntryEvent, Target, boundary_target, detect_entries,
                      entry_rate, run_batch)

__all__ = [
    "CollisionEvent", "Obstacle", "PhasePoint", "Segment", "Table",
    "TorusPoint", "UnitVector", "advance", "check_finite_horizon",
    "default_table", "flow_segments", "next_collision", "sample_mu",
    "EntryEvent", "Target", "boundary_target", "detect_entries",
    "entry_rate", "run_batch",
]
