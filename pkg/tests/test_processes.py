"""Point-set functionals against brute-force oracles and synthetic laws."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sinai_ppp.core import UnitVector
from sinai_ppp.laws import geometric_pmf, sample_geometric, sample_ppp
from sinai_ppp.processes import (MIN, MAX, HazardCount, ScaledClock,
                                 build_process, count_in_window, hazard_count,
                                 hazard_local_time, line_map,
                                 marked_point_set, records_extract,
                                 window_counts)
from sinai_ppp.stats import chi2_gof, two_sample_ks
from sinai_ppp.targets import EntryEvent


def mk(times, marks):
    return marked_point_set(np.asarray(times, dtype=float), np.asarray(marks))


def entry(p_angle, u_angle):
    return EntryEvent(t=1.0, j=0,
                      p=UnitVector.from_angle(p_angle),
                      u=UnitVector.from_angle(u_angle),
                      duration=0.01, closest=0.0,
                      phi_in=math.remainder(u_angle - (p_angle + math.pi),
                                            2 * math.pi))


finite_floats = st.floats(allow_nan=False, allow_infinity=False,
                          min_value=-1e6, max_value=1e6)


class TestMarkedPointSet:
    def test_sorting_and_alignment(self):
        pp = mk([3.0, 1.0, 2.0], [30, 10, 20])
        assert list(pp.times) == [1.0, 2.0, 3.0]
        assert list(pp.marks) == [10, 20, 30]
        assert not pp.tie_adjusted

    def test_tie_perturbation_flagged_and_stable(self):
        pp = mk([1.0, 1.0, 1.0], [1, 2, 3])
        assert pp.tie_adjusted
        assert np.all(np.diff(pp.times) > 0)
        assert pp.times[2] - pp.times[0] < 1e-12   # infinitesimal nudges
        assert list(pp.marks) == [1, 2, 3]         # stable original order

    @given(st.lists(st.floats(min_value=0, max_value=100,
                              allow_nan=False), max_size=40))
    @settings(max_examples=100, deadline=None)
    def test_times_always_strictly_increasing(self, times):
        pp = mk(times, np.zeros(len(times)))
        assert np.all(np.diff(pp.times) > 0)


class TestBuildProcess:
    def test_empty(self):
        pp = build_process([], ScaledClock(0.1), lambda e: e.j)
        assert len(pp) == 0

    def test_single_point_scaled(self):
        e = entry(0.0, math.pi)
        e = EntryEvent(10.0, e.j, e.p, e.u, e.duration, e.closest, e.phi_in)
        pp = build_process([e], ScaledClock(h_eps=0.1), lambda ev: ev.j)
        assert pp.times[0] == pytest.approx(1.0)

    def test_duration_marks_scaled(self):
        clock = ScaledClock(h_eps=0.5, a_eps=200.0)
        e = entry(0.0, math.pi)
        pp = build_process([e], clock,
                           lambda ev: (ev.j, clock.a_eps * ev.duration))
        assert tuple(pp.marks[0]) == (0, pytest.approx(2.0))

    def test_cardinality_preserved(self):
        events = [EntryEvent(t, 0, UnitVector(1, 0), UnitVector(-1, 0),
                             0.01, 0.0, 0.0) for t in np.linspace(1, 9, 25)]
        pp = build_process(events, ScaledClock(2.0), lambda ev: ev.t)
        assert len(pp) == 25


def brute_hazard_count(times, marks):
    zeros = [t for t, m in zip(times, marks) if m == 0]
    tau0 = min(zeros) if zeros else math.inf
    c = sum(1 for t, m in zip(times, marks) if m == 1 and t < tau0)
    return HazardCount(c, not zeros)


class TestHazardCount:
    def test_stated_examples(self):
        assert hazard_count(mk([0.3, 0.5, 0.9, 1.2], [1, 1, 0, 1])) == \
            HazardCount(2, False)
        assert hazard_count(mk([0.1], [0])) == HazardCount(0, False)

    def test_truncated_flag(self):
        assert hazard_count(mk([0.3, 0.5], [1, 1])) == HazardCount(2, True)
        assert hazard_count(mk([], [])) == HazardCount(0, True)

    @given(st.lists(st.tuples(st.floats(0, 100, allow_nan=False),
                              st.integers(0, 1)), max_size=60))
    @settings(max_examples=150, deadline=None)
    def test_matches_brute_force(self, pts):
        times = [t for t, _ in pts]
        marks = [m for _, m in pts]
        pp = mk(times, marks)
        assert hazard_count(pp) == brute_hazard_count(pp.times, pp.marks)

    def test_geometric_law_on_bernoulli_ppp(self):
        # marks Bernoulli(p) on a unit-rate PPP: count before first 0 is
        # geometric: P(M = k) = p^k (1 - p)
        p = 1.0 / 3.0
        rng = np.random.default_rng(77)
        n_trials = 10_000
        counts = []
        for _ in range(n_trials):
            pp = sample_ppp(1.0, None, (0.0, 60.0), rng)
            marks = (rng.random(len(pp)) < p).astype(int)
            res = hazard_count(mk(pp.times, marks))
            if not res.truncated:
                counts.append(res.count)
        assert len(counts) > 0.99 * n_trials
        kmax = max(counts)
        hist = np.bincount(counts, minlength=kmax + 2)
        probs = geometric_pmf(np.arange(kmax + 1), p)
        probs = np.append(probs, 1.0 - probs.sum())   # tail cell
        rep = chi2_gof(np.append(hist[:kmax + 1], 0), probs,
                       name="hazard_geometric")
        assert rep.passed, rep


class TestHazardLocalTime:
    def test_no_one_points(self):
        res = hazard_local_time(mk([0.5], [[0, 0.7]]))
        assert res.total == 0.0 and not res.truncated

    def test_stated_example(self):
        res = hazard_local_time(mk([0.2, 0.5], [[1, 0.4], [0, 0.9]]))
        assert res.total == pytest.approx(0.4) and not res.truncated

    def test_truncation(self):
        res = hazard_local_time(mk([0.2], [[1, 0.4]]))
        assert res.total == pytest.approx(0.4) and res.truncated

    def test_matches_compound_monte_carlo(self):
        # hazard local time of a labeled PPP with i.i.d. durations equals
        # sum_{i<=M} X_i with M geometric(p): two-sample KS vs direct MC
        p = 1.0 / 3.0
        rng = np.random.default_rng(5)
        vals = []
        for _ in range(4000):
            pp = sample_ppp(1.0, None, (0.0, 60.0), rng)
            labels = (rng.random(len(pp)) < p).astype(float)
            durs = rng.random(len(pp))
            res = hazard_local_time(mk(pp.times,
                                       np.column_stack([labels, durs])))
            if not res.truncated:
                vals.append(res.total)
        m = sample_geometric(p, 4000, rng)
        oracle = np.array([rng.random(k).sum() for k in m])
        rep = two_sample_ks(vals, oracle, name="hazard_local_time_vs_mc")
        assert rep.passed, rep


def brute_records(times, marks, direction):
    out = []
    for i in range(len(times)):
        if direction == MIN:
            ok = all(marks[j] > marks[i] for j in range(len(times))
                     if times[j] < times[i])
        else:
            ok = all(marks[j] < marks[i] for j in range(len(times))
                     if times[j] < times[i])
        if ok:
            out.append(times[i])
    return np.asarray(out)


class TestRecords:
    def test_decreasing_marks_all_records(self):
        pp = mk([1, 2, 3, 4], [0.9, 0.7, 0.5, 0.1])
        assert list(records_extract(pp, MIN)) == [1, 2, 3, 4]

    def test_stated_example(self):
        pp = mk([1, 2, 3], [0.9, 0.5, 0.7])
        assert list(records_extract(pp, MIN)) == [1, 2]

    def test_max_direction(self):
        pp = mk([1, 2, 3], [0.1, 0.5, 0.3])
        assert list(records_extract(pp, MAX)) == [1, 2]

    @given(st.lists(st.tuples(st.floats(0, 100, allow_nan=False),
                              st.floats(-50, 50, allow_nan=False)),
                    max_size=200),
           st.sampled_from([MIN, MAX]))
    @settings(max_examples=200, deadline=None)
    def test_matches_brute_force(self, pts, direction):
        pp = mk([t for t, _ in pts], [v for _, v in pts])
        got = records_extract(pp, direction)
        want = brute_records(list(pp.times), list(pp.marks), direction)
        assert np.array_equal(got, want)

    def test_record_probability_is_one_over_ell(self):
        # i.i.d. continuous marks: P(l-th point is a record) = 1/l,
        # independent across l
        rng = np.random.default_rng(11)
        n_rep, n_pts = 10_000, 20
        indicators = np.zeros((n_rep, n_pts), dtype=bool)
        for r in range(n_rep):
            marks = rng.random(n_pts)
            run_min = np.minimum.accumulate(marks)
            indicators[r, 0] = True
            indicators[r, 1:] = marks[1:] < run_min[:-1]
        assert indicators[:, 0].all()          # the first point is always a record
        for ell in range(2, n_pts + 1):
            phat = indicators[:, ell - 1].mean()
            p0 = 1.0 / ell
            assert abs(phat - p0) < 3 * math.sqrt(p0 * (1 - p0) / n_rep), ell
        # harmonic mean count: E[#records among first 4] = 1+1/2+1/3+1/4
        count4 = indicators[:, :4].sum(axis=1)
        se = count4.std(ddof=1) / math.sqrt(n_rep)
        assert abs(count4.mean() - 25 / 12) < 3 * se


class TestLineMap:
    def test_diameter_along_x(self):
        r, theta = line_map(entry(0.0, math.pi))     # s=(1,0), inward u=(-1,0)
        assert r == pytest.approx(0.0, abs=1e-12)
        assert theta == pytest.approx(math.pi / 2, abs=1e-12)

    def test_vertical_diameter(self):
        r, theta = line_map(entry(math.pi / 2, -math.pi / 2))
        assert r == pytest.approx(0.0, abs=1e-12)
        assert theta == pytest.approx(0.0, abs=1e-12)

    def test_quarter_incidence_foot_oracle(self):
        # s = (1,0), phi = +pi/4: foot of the center perpendicular sits at
        # (1/2, -1/2), so r = -sin(pi/4), theta = 3pi/4
        e = entry(0.0, math.pi + math.pi / 4)
        assert e.phi_in == pytest.approx(math.pi / 4)
        r, theta = line_map(e)
        assert r == pytest.approx(-math.sin(math.pi / 4), abs=1e-12)
        assert theta == pytest.approx(3 * math.pi / 4, abs=1e-12)
        # mirrored incidence lands on the positive-r representative
        e2 = entry(0.0, math.pi - math.pi / 4)
        r2, theta2 = line_map(e2)
        assert r2 == pytest.approx(math.sin(math.pi / 4), abs=1e-12)
        assert theta2 == pytest.approx(math.pi / 4, abs=1e-12)

    @given(st.floats(0, 2 * math.pi - 1e-9),
           st.floats(-math.pi / 2 + 1e-6, math.pi / 2 - 1e-6))
    @settings(max_examples=300, deadline=None)
    def test_geometry_invariants(self, p_angle, phi):
        e = entry(p_angle, p_angle + math.pi + phi)
        r, theta = line_map(e)
        assert 0.0 <= theta < math.pi
        assert abs(abs(r) - abs(math.sin(phi))) < 1e-12
        # the chord {x cos(theta) + y sin(theta) = r} passes through s
        s_proj = e.p.ux * math.cos(theta) + e.p.uy * math.sin(theta)
        assert abs(s_proj - r) < 1e-10
        # and is parallel to u
        n_dot_u = e.u.ux * math.cos(theta) + e.u.uy * math.sin(theta)
        assert abs(n_dot_u) < 1e-10


class TestCountInWindow:
    def test_empty(self):
        assert count_in_window(mk([], []), 0.0, 1.0) == 0

    def test_total(self):
        pp = mk([0.1, 0.5, 0.9], [1, 2, 3])
        assert count_in_window(pp, 0.0, 1.0) == 3

    def test_predicate(self):
        pp = mk([0.1, 0.5, 0.9], [1, 2, 3])
        assert count_in_window(pp, 0.0, 1.0, lambda m: m % 2 == 1) == 2

    @given(st.lists(st.floats(0, 10, allow_nan=False), max_size=50),
           st.integers(1, 5))
    @settings(max_examples=100, deadline=None)
    def test_disjoint_windows_partition(self, times, n_win):
        pp = mk(times, np.zeros(len(times)))
        edges = np.linspace(0, 10 + 1e-9, n_win + 1)
        total = sum(count_in_window(pp, a, b)
                    for a, b in zip(edges[:-1], edges[1:]))
        assert total == len(pp)

    def test_window_counts_matches_count_in_window(self):
        pp = mk(np.linspace(0, 9.9, 34), np.arange(34))
        w = window_counts(pp, 10.0, 2.5)
        assert list(w) == [count_in_window(pp, 2.5 * k, 2.5 * (k + 1))
                           for k in range(4)]
