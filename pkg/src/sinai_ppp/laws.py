"""Reference limit laws: closed-form CDFs, seeded samplers, synthetic processes.

Every closed form here is locked by a quadrature oracle in the test suite;
samplers use inverse-CDF transforms so they are exact and cheap.  All
randomness flows through numpy Generators seeded via SeedSequence keys, so
each experiment is bit-reproducible from (config, master_seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import as_rng
from .processes import MarkedPointSet, marked_point_set
from .targets import BOUNDARY, Target


@dataclass(frozen=True)
class RefLaw:
    """A one-dimensional reference law: name, CDF, sampler, support."""

    name: str
    cdf: Callable[[np.ndarray], np.ndarray]
    sampler: Callable[[int, np.random.Generator], np.ndarray]
    support: tuple[float, float]


def uniform_law(lo: float = 0.0, hi: float = 1.0) -> RefLaw:
    span = hi - lo

    def cdf(x):
        return np.clip((np.asarray(x, dtype=np.float64) - lo) / span, 0.0, 1.0)

    return RefLaw(f"uniform[{lo},{hi}]", cdf,
                  lambda n, rng: lo + span * rng.random(n), (lo, hi))


def chord_time_cdf(x, r_j: float = 1.0):
    """CDF of the scaled ball-crossing duration: 1 - sqrt(4 - (x/r)^2)/2.

    The scaled duration is 2 r_j cos(phi) with incidence density
    cos(phi)/2, which gives density y / (2 sqrt(4 - y^2)) on [0, 2] for
    the r_j = 1 case.
    """
    y = np.clip(np.asarray(x, dtype=np.float64) / r_j, 0.0, 2.0)
    return 1.0 - np.sqrt(4.0 - y * y) / 2.0


def chord_time_law(r_j: float = 1.0) -> RefLaw:
    def sampler(n, rng):
        u = rng.random(n)
        return 2.0 * r_j * np.sqrt(1.0 - (1.0 - u) ** 2)

    return RefLaw(f"chord_time(r={r_j})", lambda x: chord_time_cdf(x, r_j),
                  sampler, (0.0, 2.0 * r_j))


def hazard_Y_cdf(y):
    """CDF of the normalized single-visit local time: 1 - sqrt(1 - y^2)."""
    y = np.clip(np.asarray(y, dtype=np.float64), 0.0, 1.0)
    return 1.0 - np.sqrt(1.0 - y * y)


def hazard_Y_law() -> RefLaw:
    def sampler(n, rng):
        u = rng.random(n)
        return np.sqrt(1.0 - (1.0 - u) ** 2)

    return RefLaw("hazard_Y", hazard_Y_cdf, sampler, (0.0, 1.0))


def geometric_pmf(k, p: float):
    """P(M = k) = p^k (1 - p) for k >= 0."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    k = np.asarray(k)
    if np.any(k < 0):
        raise ValueError("k must be nonnegative")
    return p ** k * (1.0 - p)


def sample_geometric(p: float, n: int, rng) -> np.ndarray:
    """Number of 1-marks before the first 0-mark: support {0, 1, ...}."""
    rng = as_rng(rng)
    # numpy's geometric counts trials to first success (support >= 1)
    return rng.geometric(1.0 - p, size=n) - 1


def mark_density_entry(j: int, p_angle, u_angle, targets: Sequence[Target]):
    """Limit density of the entry marks (label, entry point, velocity).

    Angles parametrize the entry offset p and velocity u on the circle; the
    density w.r.t. d(p_angle) d(u_angle) and counting measure on labels is
    r_j/(2 d pi) <(-p), u>^+ restricted to the half-circle <p, n_qj> >= 0
    for boundary targets, with d = sum_j d_j r_j.
    """
    tgt = {t.label: t for t in targets}[j]
    d = sum(t.weight * t.shape_radius for t in targets)
    p_angle = np.asarray(p_angle, dtype=np.float64)
    u_angle = np.asarray(u_angle, dtype=np.float64)
    inward = np.maximum(-np.cos(u_angle - p_angle), 0.0)   # <(-p), u>^+
    dens = tgt.shape_radius / (2.0 * d * math.pi) * inward
    if tgt.kind == BOUNDARY:
        n = tgt.inward_normal
        n_angle = math.atan2(n.uy, n.ux)
        dens = dens * (np.cos(p_angle - n_angle) >= 0.0)
    return dens


def label_marginal(targets: Sequence[Target]) -> dict[int, float]:
    """P(label = j) = d_j r_j / d under the entry mark law."""
    d = sum(t.weight * t.shape_radius for t in targets)
    return {t.label: t.weight * t.shape_radius / d for t in targets}


def phi_in_cdf(phi):
    """CDF of the entry incidence angle: density cos(phi)/2 on [-pi/2, pi/2]."""
    phi = np.clip(np.asarray(phi, dtype=np.float64), -0.5 * math.pi, 0.5 * math.pi)
    return 0.5 * (1.0 + np.sin(phi))


def phi_in_law() -> RefLaw:
    def sampler(n, rng):
        return np.arcsin(2.0 * rng.random(n) - 1.0)

    return RefLaw("phi_in_cos_law", phi_in_cdf, sampler,
                  (-0.5 * math.pi, 0.5 * math.pi))


def sample_entry_marks(targets: Sequence[Target], n: int, rng):
    """Exact draws (label, p_angle, u_angle) from the entry mark law.

    The density factorizes: label with weight d_j r_j / d, entry angle
    uniform on the allowed arc, incidence by the cos law; the velocity is
    the inward radial direction rotated by the incidence angle.
    """
    rng = as_rng(rng)
    weights = label_marginal(targets)
    labels = np.array(sorted(weights))
    probs = np.array([weights[k] for k in labels])
    tgt = {t.label: t for t in targets}
    lab = rng.choice(labels, size=n, p=probs)
    p_angle = np.empty(n)
    for k in labels:
        sel = lab == k
        m = int(sel.sum())
        t = tgt[k]
        if t.kind == BOUNDARY:
            nrm = t.inward_normal
            base = math.atan2(nrm.uy, nrm.ux)
            p_angle[sel] = base + math.pi * (rng.random(m) - 0.5)
        else:
            p_angle[sel] = 2.0 * math.pi * rng.random(m)
    phi = np.arcsin(2.0 * rng.random(n) - 1.0)
    u_angle = p_angle + math.pi + phi       # inward radial direction, tilted
    return lab, p_angle % (2.0 * math.pi), u_angle % (2.0 * math.pi)


def sample_ppp(intensity: float, mark_law: RefLaw | None, window: tuple[float, float],
               seed) -> MarkedPointSet:
    """Homogeneous Poisson arrivals on the window with i.i.d. marks."""
    if intensity <= 0.0:
        raise ValueError("intensity must be positive")
    rng = as_rng(seed)
    t0, t1 = window
    n = rng.poisson(intensity * (t1 - t0))
    times = np.sort(t0 + (t1 - t0) * rng.random(n))
    marks = mark_law.sampler(n, rng) if mark_law is not None else np.zeros(n)
    return marked_point_set(times, marks)


def sample_record_limit(t_horizon: float, seed) -> np.ndarray:
    """Record times of the limit process on [0, t_horizon].

    Arrival times are partial sums of standard exponentials; the l-th
    arrival is kept with independent probability 1/l.
    """
    if t_horizon <= 0.0:
        raise ValueError("t_horizon must be positive")
    rng = as_rng(seed)
    kept = []
    t = 0.0
    ell = 0
    while True:
        ell += 1
        t += rng.exponential()
        if t > t_horizon:
            return np.array(kept)
        if rng.random() < 1.0 / ell:
            kept.append(t)


def sample_line_process(kappa: float, n_replicas: int, seed) -> list[np.ndarray]:
    """Replicas of the Poisson line process in the unit disk.

    Each replica holds Poisson(2*kappa) lines as rows (r, theta) with
    r ~ U[-1, 1] and theta ~ U[0, pi] independent; the joint intensity is
    (kappa/pi) dr dtheta.
    """
    if kappa <= 0.0:
        raise ValueError("kappa must be positive")
    rng = as_rng(seed)
    out = []
    for _ in range(n_replicas):
        n = rng.poisson(2.0 * kappa)
        r = 2.0 * rng.random(n) - 1.0
        theta = math.pi * rng.random(n)
        out.append(np.column_stack([r, theta]))
    return out


def compound_local_time_sampler(p: float, m1_sampler: Callable, n: int,
                                seed) -> np.ndarray:
    """Samples of sum_{i=1}^{M} X_i with M geometric(p), X_i ~ m1_sampler."""
    rng = as_rng(seed)
    counts = sample_geometric(p, n, rng)
    out = np.zeros(n)
    total = int(counts.sum())
    draws = m1_sampler(total, rng)
    pos = 0
    for i, c in enumerate(counts):
        if c:
            out[i] = draws[pos:pos + c].sum()
            pos += c
    return out
