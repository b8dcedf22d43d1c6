"""Acceptance gate: one test per criterion, printing a pass/fail line each.

Criteria AC8b and AC9b assert the alternative normalization constants
that the Monte Carlo oracles refute (a half-scale form of the compound
local-time limit and a pi-inflated entry-rate clock); they are asserted
unweakened and fail honestly, with the corrected companion checks (AC8a,
AC9a) passing alongside.  The harness writes the same adjudication
numbers to adjudication.json / meta.json.
"""

import json
import math

import numpy as np
import pytest
from scipy import integrate

from sinai_ppp.core import default_table, TorusPoint
from sinai_ppp.harness import default_config
from sinai_ppp.harness.config import flux_rate
from sinai_ppp.harness.experiments import RUNNERS
from sinai_ppp.laws import (chord_time_cdf, hazard_Y_cdf, phi_in_cdf,
                            sample_ppp, uniform_law)
from sinai_ppp.processes import marked_point_set, records_extract
from sinai_ppp.stats import (chi2_gof, chi2_homogeneity, exp_interarrival,
                             ks_one_sample, poisson_dispersion, two_sample_ks,
                             window_independence)
from sinai_ppp.targets import Target, entry_rate

SEED = 7
ALPHA = 0.01


def announce(tag: str, ok: bool, detail: str = ""):
    print(f"[{'PASS' if ok else 'FAIL'}] {tag}" + (f": {detail}" if detail else ""))


def by_name(reports, prefix: str):
    hits = [r for r in reports if r["test_name"].startswith(prefix)]
    assert hits, f"no report named {prefix}*"
    return hits


@pytest.fixture(scope="module")
def outdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def run_experiment(exp: str, outdir):
    cfg = default_config(exp, output_dir=outdir, master_seed=SEED)
    RUNNERS[exp](cfg)
    out = cfg.output_dir
    reports = json.loads((out / "reports.json").read_text())
    return cfg, out, reports


@pytest.fixture(scope="module")
def e1(outdir):
    return run_experiment("E1", outdir)


@pytest.fixture(scope="module")
def e2(outdir):
    return run_experiment("E2", outdir)


@pytest.fixture(scope="module")
def e3(outdir):
    return run_experiment("E3", outdir)


@pytest.fixture(scope="module")
def e4(outdir):
    return run_experiment("E4", outdir)


class TestPoissonity:
    def test_ac01_entry_time_poissonity(self, e1):
        """>= 2000 entries at eps = 0.005: gaps, dispersion, independence."""
        _cfg, out, reports = e1
        n_events = by_name(reports, "exp_interarrival[eps=0.005]")[0]["n"]
        ok_n = n_events >= 2000
        checks = {name: by_name(reports, f"{name}[eps=0.005]")[0]["passed"]
                  for name in ("exp_interarrival", "poisson_dispersion",
                               "window_independence")}
        ok = ok_n and all(checks.values())
        announce("AC1 entry-time Poissonity (eps=0.005)", ok,
                 f"n={n_events}, {checks}")
        assert ok_n, f"only {n_events} entries"
        for name, passed in checks.items():
            assert passed, name

    def test_ac01_ks_trend_reported(self, e1):
        _cfg, out, _reports = e1
        trend = json.loads((out / "meta.json").read_text())["ks_trend_by_eps"]
        assert {row["eps"] for row in trend} == {0.02, 0.01, 0.005}
        announce("AC1 KS trend recorded (not asserted)", True,
                 str([(r["eps"], round(r["ks_statistic"], 4)) for r in trend]))


class TestMarkLaw:
    def test_ac02_mark_laws(self, e2):
        """Incidence cos law, interior uniformity, boundary half-circle."""
        _cfg, out, reports = e2
        phi_int = by_name(reports, "phi_in_cos_law[eps=0.005,j=0]")[0]
        phi_bnd = by_name(reports, "phi_in_cos_law[eps=0.005,j=1]")[0]
        uni = by_name(reports, "p_angle_uniform[eps=0.005,j=0]")[0]
        leak = by_name(reports, "boundary_support_leakage[eps=0.005,j=1]")[0]
        over = by_name(reports, "boundary_support_overhang[eps=0.005,j=1]")[0]
        n_bnd = phi_bnd["n"]
        ok = (phi_int["passed"] and phi_bnd["passed"] and uni["passed"]
              and leak["passed"] and over["passed"] and n_bnd >= 5000)
        announce("AC2 entry mark law (eps=0.005)", ok,
                 f"n_boundary={n_bnd}, leak={leak['statistic']:.4f}")
        assert phi_int["passed"] and phi_bnd["passed"]
        assert uni["passed"]
        assert leak["passed"] and over["passed"]
        assert n_bnd >= 5000


class TestCommittor:
    def test_ac03_committor_and_geometric(self, e3):
        """d0 r0 = 2 vs d1 r1 = 1: committor 2/3 +- 0.02, geometric(1/3)."""
        _cfg, out, reports = e3
        meta = json.loads((out / "meta.json").read_text())
        comm = by_name(reports, "committor_abs_error")[0]
        geom = by_name(reports, "hazard_count_geometric")[0]
        swap = by_name(reports, "committor_swap_abs_error")[0]
        trunc = by_name(reports, "truncated_trial_rate")[0]
        ok = all(r["passed"] for r in (comm, geom, swap, trunc)) \
            and meta["n_trials"] >= 5000
        announce("AC3 committor/geometric law", ok,
                 f"committor={meta['committor']:.4f} (target 2/3), "
                 f"chi2 p={geom['p_value']:.3f}, drop={meta['drop_rate']:.2%}")
        assert comm["passed"], meta
        assert geom["passed"], geom
        assert swap["passed"], meta
        assert trunc["passed"]
        assert meta["n_trials"] >= 5000


class TestChordTime:
    def test_ac04_chord_time_law(self, e4):
        """Scaled durations follow 1 - sqrt(4 - (x/r)^2)/2; boundary O(eps)."""
        _cfg, out, reports = e4
        ks_int = by_name(reports, "chord_time_ks[eps=0.005,j=0]")[0]
        bias_int = by_name(reports, "duration_mean_bias[eps=0.005,j=0]")[0]
        bias_bnd = by_name(reports, "duration_mean_bias[eps=0.005,j=1]")[0]
        cum = by_name(reports, "cumulative_local_time_ks[eps=0.005,j=0]")[0]
        ok = all(r["passed"] for r in (ks_int, bias_int, bias_bnd, cum))
        announce("AC4 chord-time law (eps=0.005)", ok,
                 f"interior KS p={ks_int['p_value']:.3f}, "
                 f"boundary bias={bias_bnd['statistic']:.4f}")
        assert ks_int["passed"], ks_int
        assert bias_int["passed"] and bias_bnd["passed"]
        assert cum["passed"], cum


class TestClosestApproach:
    def test_ac05_closest_approach_uniform(self, outdir):
        _cfg, out, reports = run_experiment("E5", outdir)
        ks = by_name(reports, "closest_uniform_ks[eps=0.005]")[0]
        gaps = by_name(reports, "exp_interarrival[eps=0.005]")[0]
        disp = by_name(reports, "poisson_dispersion[eps=0.005]")[0]
        unit = by_name(reports, "unit_intensity_in_flux_clock[eps=0.005]")[0]
        ok = all(r["passed"] for r in (ks, gaps, disp, unit))
        announce("AC5 closest-approach law (eps=0.005)", ok,
                 f"uniform KS p={ks['p_value']:.3f}, "
                 f"unit intensity z={unit['statistic']:.2f}")
        assert ks["passed"] and gaps["passed"] and disp["passed"]
        assert unit["passed"], unit


class TestLineProcess:
    def test_ac06_line_process(self, outdir):
        _cfg, out, reports = run_experiment("E6", outdir)
        names = ("r_uniform", "theta_uniform", "r_theta_independence",
                 "line_count_poisson", "r_vs_synthetic", "theta_vs_synthetic",
                 "counts_vs_synthetic", "incidence_cos_law")
        got = {n: by_name(reports, f"{n}[eps=0.005]")[0] for n in names}
        core = ("r_uniform", "theta_uniform", "r_theta_independence",
                "line_count_poisson")
        ok = all(got[n]["passed"] for n in core)
        announce("AC6 line process (eps=0.005)", ok,
                 {n: round(got[n]["p_value"], 3) for n in names})
        for n in core:
            assert got[n]["passed"], got[n]
        for n in names:
            assert got[n]["passed"], got[n]


class TestRecords:
    def test_ac07_records(self, outdir):
        _cfg, out, reports = run_experiment("E7", outdir)
        first = by_name(reports, "first_point_always_record")[0]
        prob = by_name(reports, "record_prob_one_over_ell_max_z")[0]
        indep = by_name(reports, "record_indicator_independence")[0]
        law = by_name(reports, "record_count_law")[0]
        ok = all(r["passed"] for r in (first, prob, indep, law))
        announce("AC7 records functional", ok,
                 f"max |z| over l<=20: {prob['statistic']:.2f} (<=3), "
                 f"count-law chi2 p={law['p_value']:.3f}")
        assert first["passed"] and prob["passed"]
        assert indep["passed"] and law["passed"]


@pytest.fixture(scope="module")
def e8(outdir):
    return run_experiment("E8", outdir)


class TestCompoundLocalTime:
    def test_ac08a_compound_local_time_derived_oracle(self, e8):
        """Scaled hazard local time: zero atom and the chord-law compound sum."""
        _cfg, out, reports = e8
        atom = by_name(reports, "zero_atom_abs_error")[0]
        chord = by_name(reports, "compound_ks_chord_oracle")[0]
        mean = by_name(reports, "mean_wald_chord")[0]
        ok = atom["passed"] and chord["passed"] and mean["passed"]
        announce("AC8a compound local time, derived chord oracle", ok,
                 f"KS p={chord['p_value']:.3f}, atom err={atom['statistic']:.4f}")
        assert atom["passed"], atom
        assert chord["passed"], chord
        assert mean["passed"], mean

    def test_ac08b_compound_local_time_y_oracle(self, e8):
        """KS against the r1*sum(Y_i) oracle, asserted unweakened.

        That oracle is the half-scale copy of the law the visits
        demonstrably follow (single-visit durations live on [0, 2 r1], not
        [0, r1]); the measured mean is 2x its mean, so this KS is expected
        to fail.  A red here is the honest outcome of the adjudication in
        meta.json.
        """
        _cfg, out, reports = e8
        yks = by_name(reports, "compound_ks_y_oracle")[0]
        meta = json.loads((out / "meta.json").read_text())
        announce("AC8b compound local time, r1*sum(Y) oracle (as given)",
                 yks["passed"],
                 f"KS p={yks['p_value']:.3g}; measured mean "
                 f"{meta['mean_mprime']:.3f} vs Y-oracle mean "
                 f"{meta['mean_y_oracle']:.3f} (chord oracle "
                 f"{meta['mean_chord_oracle']:.3f})")
        assert yks["passed"], (
            "Y-oracle KS fails as measured: that form is the half-scale "
            f"copy of the observed law ({meta})")


@pytest.fixture(scope="module")
def rate():
    table = default_table()
    target = Target(0, TorusPoint(0.5, 0.17), 1.0, "interior")
    eps = 0.01
    est = entry_rate(table, target, eps, n_samples=400, t_max=600.0,
                     master_seed=SEED)
    return est, flux_rate(table, target, eps)


class TestRateAdjudication:
    def test_ac09a_rate_matches_flux_formula(self, rate):
        """Measured entry rate equals d_j r_j eps / Area(Q) within 2 SE."""
        est, flux = rate
        z_flux = (est.rate - flux) / est.stderr
        z_pi = (est.rate - math.pi * flux) / est.stderr
        ok = abs(z_flux) <= 2.0
        announce("AC9a entry rate matches d_j r_j eps/Area within 2 SE", ok,
                 f"measured {est.rate:.6f} +- {est.stderr:.6f}; "
                 f"z_flux={z_flux:+.2f}, z_pi_inflated={z_pi:+.1f}")
        assert ok
        # the competing constants are decisively separated
        assert abs(z_pi) > 20.0

    def test_ac09b_rate_matches_pi_formula(self, rate):
        """Measured rate vs pi d_j r_j eps / Area(Q) within 2 SE, verbatim.

        The pi-inflated clock normalizes the scaled process to intensity
        1/pi instead of 1 (the mean free path already carries the factor pi
        this constant double-counts); the Monte Carlo oracle rejects it by
        >100 SE, so this check fails honestly.  The full comparison of all
        candidate constants is written to adjudication.json by E1/E2/E4.
        """
        est, flux = rate
        z = (est.rate - math.pi * flux) / est.stderr
        ok = abs(z) <= 2.0
        announce("AC9b entry rate matches pi d_j r_j eps/Area (verbatim)", ok,
                 f"z={z:+.1f}")
        assert ok, (f"measured {est.rate:.6f} +- {est.stderr:.6f} vs "
                    f"pi-inflated {math.pi * flux:.6f}: z={z:+.1f}")


class TestOracleEquivalences:
    def test_ac10_records_vs_brute_force(self):
        rng = np.random.default_rng(SEED)
        for trial in range(300):
            n = int(rng.integers(0, 201))
            times = np.sort(rng.random(n)) * 100
            marks = rng.random(n)
            pp = marked_point_set(times, marks)
            got = records_extract(pp, "min")
            want = [t for i, t in enumerate(pp.times)
                    if all(pp.marks[j] > pp.marks[i] for j in range(len(pp))
                           if pp.times[j] < t)]
            assert np.array_equal(got, np.asarray(want))
        announce("AC10 records vs brute force (n <= 200)", True, "300 cases")

    def test_ac10_cdfs_vs_quadrature(self):
        worst = 0.0
        for x in np.linspace(1e-6, 2 - 1e-6, 101):
            want, _ = integrate.quad(lambda y: y / (2 * math.sqrt(4 - y * y)),
                                     0, x, limit=200)
            worst = max(worst, abs(chord_time_cdf(x, 1.0) - want))
        for x in np.linspace(1e-6, 1 - 1e-6, 101):
            want, _ = integrate.quad(lambda y: y / math.sqrt(1 - y * y),
                                     0, x, limit=200)
            worst = max(worst, abs(hazard_Y_cdf(x) - want))
        for x in np.linspace(-math.pi / 2 + 1e-6, math.pi / 2 - 1e-6, 101):
            want, _ = integrate.quad(lambda p: math.cos(p) / 2,
                                     -math.pi / 2, x)
            worst = max(worst, abs(float(phi_in_cdf(x)) - want))
        ok = worst < 1e-8
        announce("AC10 closed-form CDFs vs quadrature", ok, f"worst={worst:.2e}")
        assert ok

    def test_ac10_null_calibration_of_all_tests(self):
        """Rejection rate at alpha over m replicas within alpha+-2 sqrt(alpha/m)."""
        m = 600
        lo = ALPHA - 2 * math.sqrt(ALPHA / m)
        hi = ALPHA + 2 * math.sqrt(ALPHA / m)
        rng = np.random.default_rng(SEED + 1)
        unif = uniform_law()

        def reject_rate(fn):
            return np.mean([not fn(k).passed for k in range(m)])

        def ks_null(_k):
            return ks_one_sample(rng.random(500), unif.cdf)

        def two_null(_k):
            return two_sample_ks(rng.random(500), rng.random(500))

        def chi2_null(_k):
            counts = np.bincount(rng.integers(0, 8, size=800), minlength=8)
            return chi2_gof(counts, np.full(8, 1 / 8))

        def homog_null(_k):
            return chi2_homogeneity(rng.poisson(4, 500), rng.poisson(4, 500))

        def disp_null(_k):
            return poisson_dispersion(rng.poisson(4.0, size=100))

        def gaps_null(_k):
            return exp_interarrival(np.cumsum(rng.exponential(size=80)))

        def windows_null(_k):
            pp = sample_ppp(2.0, None, (0.0, 120.0), rng)
            return window_independence(pp, window_len=2.0)

        rates = {}
        for name, fn in [("ks_one_sample", ks_null), ("two_sample_ks", two_null),
                         ("chi2_gof", chi2_null), ("chi2_homogeneity", homog_null),
                         ("poisson_dispersion", disp_null),
                         ("exp_interarrival", gaps_null),
                         ("window_independence", windows_null)]:
            rates[name] = float(reject_rate(fn))
        ok = all(lo <= r <= hi for r in rates.values())
        announce("AC10 null rejection-rate calibration", ok,
                 f"[{lo:.4f}, {hi:.4f}]: " +
                 ", ".join(f"{k}={v:.4f}" for k, v in rates.items()))
        for name, r in rates.items():
            assert lo <= r <= hi, (name, r)


class TestDeterminism:
    def test_ac11_byte_identical_and_worker_invariant(self, tmp_path):
        base = dict(eps_schedule=(0.01,), n_trajectories=8, t_max=3000.0,
                    min_events=300, master_seed=SEED)
        names = ("entries.csv", "counts.csv", "reports.json",
                 "adjudication.json")
        runs = {}
        for tag, workers in (("a", 1), ("b", 1), ("c", 4)):
            cfg = default_config("E1", output_dir=tmp_path / tag,
                                 worker_count=workers, **base)
            RUNNERS["E1"](cfg)
            runs[tag] = {n: (cfg.output_dir / n).read_bytes() for n in names}
        identical = all(runs["a"][n] == runs["b"][n] for n in names)
        worker_inv = all(runs["a"][n] == runs["c"][n] for n in names)
        announce("AC11 determinism", identical and worker_inv,
                 f"rerun identical={identical}, worker-invariant={worker_inv}")
        assert identical and worker_inv
