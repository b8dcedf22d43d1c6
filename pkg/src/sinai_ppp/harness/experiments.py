"""Experiments E1-E8: simulation, statistics, machine-readable outputs.

Each experiment writes entries.csv / counts.csv (as applicable), a
reports.json array of asserted TestReports, and adjudication/meta JSON for
quantities that are reported rather than asserted.  run() returns exit code
0 iff every report in reports.json passed.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np
from scipy import special

from ..core import as_rng
from ..laws import (chord_time_law, geometric_pmf, hazard_Y_law,
                    label_marginal, sample_line_process, sample_record_limit,
                    uniform_law, phi_in_cdf)
from ..processes import line_map_arrays, marked_point_set, window_counts
from ..stats import (TestReport, chi2_gof, chi2_homogeneity,
                     correlation_report, exp_interarrival, ks_one_sample,
                     make_report, mean_z_report, poisson_dispersion,
                     threshold_report, two_sample_ks, window_independence)
from ..targets import BatchResult, run_batch
from .config import (ExperimentConfig, clock_flux, clock_scaled, flux_rate,
                     validate, weight_sum)
from .io import (write_counts_csv, write_entries_csv, write_json,
                 write_reports_json, write_trials_csv)

log = logging.getLogger(__name__)

# bound constants for the O(eps) finite-size checks, calibrated once on the
# default table (measured: support leakage ~1.3 eps, worst overhang ~2.0 eps,
# duration bias ~1.1 eps); each carries a >= 2x safety factor
LEAK_BOUND_PER_EPS = 3.0
OVERHANG_BOUND_PER_EPS = 4.0
DURATION_BIAS_PER_EPS = 3.0


def _seed(cfg: ExperimentConfig, *parts: int) -> tuple[int, ...]:
    return (cfg.master_seed, int(cfg.experiment[1])) + tuple(parts)


def _suffix(eps: float, extra: str = "") -> str:
    return f"[eps={eps:g}{extra}]"


def _batch(cfg: ExperimentConfig, eps: float, k: int,
           stop_when_all_labels: bool = False,
           n_trajectories: int | None = None,
           t_max: float | None = None) -> BatchResult:
    return run_batch(cfg.table, list(cfg.targets), eps,
                     n_trajectories or cfg.n_trajectories,
                     t_max or cfg.t_max, _seed(cfg, k),
                     workers=cfg.worker_count,
                     stop_when_all_labels=stop_when_all_labels)


def _rate_rows(cfg: ExperimentConfig, eps: float, batch: BatchResult) -> list[dict]:
    """Measured entry rate per target against the candidate normalizations."""
    rows = []
    used = [k for k in range(batch.n_trajectories) if k not in batch.discarded]
    d = weight_sum(cfg.targets)
    for t in cfg.targets:
        counts = np.zeros(len(used))
        ev = batch.events[batch.events["j"] == t.label]
        trajs, per = np.unique(ev["traj"], return_counts=True)
        remap = {k: i for i, k in enumerate(used)}
        for k, c in zip(trajs, per):
            counts[remap[int(k)]] = c
        rate = counts.mean() / batch.t_max
        se = (counts.std(ddof=1) / math.sqrt(len(used)) / batch.t_max
              if len(used) > 1 else math.inf)
        flux = flux_rate(cfg.table, t, eps)
        pi_inflated = math.pi * flux
        # per-unit-t rate constant claimed for the local-time counting
        # process (window t/eps): flow rate = eps * d_j Area / (d^2 pi)
        legacy = eps * t.weight * cfg.table.area_q / (d ** 2 * math.pi)
        rows.append({
            "eps": eps, "label": t.label, "kind": t.kind,
            "measured_rate": rate, "stderr": se, "n_events": int(counts.sum()),
            "flux_formula": flux, "z_flux": (rate - flux) / se,
            "pi_inflated_formula": pi_inflated,
            "z_pi_inflated": (rate - pi_inflated) / se,
            "area_over_d2pi_formula": legacy,
            "z_area_over_d2pi": (rate - legacy) / se,
            "scaled_rate_reference_clock": rate / clock_scaled(
                cfg.table, cfg.targets, eps),
            "scaled_rate_flux_clock": rate / clock_flux(
                cfg.table, cfg.targets, eps),
        })
    return rows


def _prepare(cfg: ExperimentConfig) -> Path:
    warnings = validate(cfg)
    for w in warnings:
        log.warning("%s: %s", cfg.experiment, w)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_e1(cfg: ExperimentConfig) -> list[TestReport]:
    """Entry-time Poissonity: exponential gaps, dispersion, independence."""
    out = _prepare(cfg)
    window_len = float(cfg.opt("window_len", 8.0))
    reports: list[TestReport] = []
    batches, count_rows, adjudication, trend = [], [], [], []
    for k, eps in enumerate(cfg.eps_schedule):
        batch = _batch(cfg, eps, k)
        batches.append((eps, batch.events))
        h = clock_scaled(cfg.table, cfg.targets, eps)
        sfx = _suffix(eps)
        assertive = eps == cfg.eps_min
        per_traj = [(k2, rows["t"] * h) for k2, rows in batch.per_trajectory()]
        pps = [marked_point_set(ts, np.zeros(ts.size)) for _, ts in per_traj]
        t_end = cfg.t_max * h

        rep_gap = exp_interarrival([ts for _, ts in per_traj],
                                   name=f"exp_interarrival{sfx}",
                                   alpha=cfg.alpha)
        trend.append({"eps": eps, "ks_statistic": rep_gap.statistic,
                      "n": rep_gap.n})
        pooled = []
        for (k2, _ts), pp in zip(per_traj, pps):
            w = window_counts(pp, t_end, window_len)
            pooled.append(w)
            count_rows += [(eps, k2, wi, -1, int(c)) for wi, c in enumerate(w)]
        rep_disp = poisson_dispersion(np.concatenate(pooled),
                                      name=f"poisson_dispersion{sfx}",
                                      alpha=cfg.alpha)
        rep_ind = window_independence(pps, window_len,
                                      name=f"window_independence{sfx}",
                                      alpha=cfg.alpha)
        new = [rep_gap, rep_disp, rep_ind]
        if len(cfg.targets) >= 2:
            marg = label_marginal(cfg.targets)
            labels = sorted(marg)
            hist = [int((batch.events["j"] == j).sum()) for j in labels]
            new.append(chi2_gof(hist, [marg[j] for j in labels],
                                name=f"label_split{sfx}", alpha=cfg.alpha))
        if assertive:
            reports += new
        adjudication += _rate_rows(cfg, eps, batch)
    write_entries_csv(out / "entries.csv", batches)
    write_counts_csv(out / "counts.csv", count_rows)
    write_json(out / "adjudication.json", adjudication)
    write_json(out / "meta.json", {"ks_trend_by_eps": trend})
    write_reports_json(out / "reports.json", reports)
    return reports


def run_e2(cfg: ExperimentConfig) -> list[TestReport]:
    """Entry mark law: incidence cos law, entry-point uniformity/support."""
    out = _prepare(cfg)
    reports: list[TestReport] = []
    batches, adjudication = [], []
    n_bins = int(cfg.opt("n_angle_bins", 16))
    for k, eps in enumerate(cfg.eps_schedule):
        batch = _batch(cfg, eps, k)
        batches.append((eps, batch.events))
        assertive = eps == cfg.eps_min
        new = []
        for t in cfg.targets:
            ev = batch.events[batch.events["j"] == t.label]
            sfx = _suffix(eps, f",j={t.label}")
            new.append(ks_one_sample(ev["phi_in"], phi_in_cdf,
                                     name=f"phi_in_cos_law{sfx}",
                                     alpha=cfg.alpha))
            if t.kind == "interior":
                ang = np.arctan2(ev["py"], ev["px"]) % (2 * math.pi)
                hist = np.bincount((ang / (2 * math.pi) * n_bins).astype(int),
                                   minlength=n_bins)
                new.append(chi2_gof(hist, np.full(n_bins, 1.0 / n_bins),
                                    name=f"p_angle_uniform{sfx}",
                                    alpha=cfg.alpha))
            else:
                n = t.inward_normal
                proj = ev["px"] * n.ux + ev["py"] * n.uy
                leak = float((proj < 0).mean())
                new.append(threshold_report(
                    f"boundary_support_leakage{sfx}", leak,
                    LEAK_BOUND_PER_EPS * eps, ev.size, alpha=cfg.alpha))
                new.append(threshold_report(
                    f"boundary_support_overhang{sfx}", float(-proj.min()),
                    OVERHANG_BOUND_PER_EPS * eps, ev.size, alpha=cfg.alpha))
        if assertive:
            reports += new
        adjudication += _rate_rows(cfg, eps, batch)
    write_entries_csv(out / "entries.csv", batches)
    write_json(out / "adjudication.json", adjudication)
    write_reports_json(out / "reports.json", reports)
    return reports


def _trial_table(batch: BatchResult) -> np.ndarray:
    """Per-trial hazard summary: counts, swapped counts, truncation flags."""
    rows = np.zeros(batch.n_trajectories,
                    dtype=[("m", np.int64), ("m_swap", np.int64),
                           ("trunc0", np.bool_), ("trunc1", np.bool_),
                           ("local_time", np.float64),
                           ("discarded", np.bool_)])
    rows["trunc0"] = True
    rows["trunc1"] = True
    for k in batch.discarded:
        rows[k]["discarded"] = True
    for k, ev in batch.per_trajectory():
        labels = ev["j"]
        times = ev["t"]
        zeros = np.flatnonzero(labels == 0)
        ones = np.flatnonzero(labels == 1)
        if zeros.size:
            t0 = times[zeros[0]]
            sel = (labels == 1) & (times < t0)
            rows[k]["m"] = int(sel.sum())
            rows[k]["local_time"] = float(ev["duration"][sel].sum())
            rows[k]["trunc0"] = False
        if ones.size:
            t1 = times[ones[0]]
            rows[k]["m_swap"] = int(((labels == 0) & (times < t1)).sum())
            rows[k]["trunc1"] = False
    return rows


def run_e3(cfg: ExperimentConfig) -> list[TestReport]:
    """Committor and hazard-count law for two competing targets."""
    out = _prepare(cfg)
    eps = cfg.eps_min
    n_trials = int(cfg.opt("n_trials", 5000))
    cap = float(cfg.opt("trial_t_max", 0.9 / eps))
    marg = label_marginal(cfg.targets)
    p = marg[1]
    batch = _batch(cfg, eps, 0, stop_when_all_labels=True,
                   n_trajectories=n_trials, t_max=cap)
    trials = _trial_table(batch)
    ok0 = ~trials["trunc0"] & ~trials["discarded"]
    ok1 = ~trials["trunc1"] & ~trials["discarded"]
    m = trials["m"][ok0]
    drop_rate = 1.0 - ok0.mean()

    committor = float((m == 0).mean())
    reports = [
        threshold_report(f"committor_abs_error{_suffix(eps)}",
                         abs(committor - (1.0 - p)), 0.02, m.size,
                         alpha=cfg.alpha),
        threshold_report(f"truncated_trial_rate{_suffix(eps)}", drop_rate,
                         0.01, n_trials, alpha=cfg.alpha),
    ]
    kmax = int(m.max())
    hist = np.bincount(m, minlength=kmax + 2).astype(float)
    probs = geometric_pmf(np.arange(kmax + 1), p)
    probs = np.append(probs, 1.0 - probs.sum())
    reports.append(chi2_gof(np.append(hist[:kmax + 1], 0), probs,
                            name=f"hazard_count_geometric{_suffix(eps)}",
                            alpha=cfg.alpha))
    # label swap: the committor toward the other target is p
    m_swap = trials["m_swap"][ok1]
    committor_swap = float((m_swap == 0).mean())
    reports.append(threshold_report(
        f"committor_swap_abs_error{_suffix(eps)}",
        abs(committor_swap - p), 0.02, m_swap.size, alpha=cfg.alpha))

    write_trials_csv(out / "trials.csv",
                     [(eps, k, int(trials[k]["m"]), int(trials[k]["m_swap"]),
                       bool(trials[k]["trunc0"] or trials[k]["discarded"]),
                       float(trials[k]["local_time"]))
                      for k in range(n_trials)])
    write_json(out / "meta.json", {
        "committor": committor, "committor_swap": committor_swap,
        "expected_committor": 1.0 - p, "drop_rate": drop_rate,
        "n_trials": n_trials})
    write_reports_json(out / "reports.json", reports)
    return reports


def run_e4(cfg: ExperimentConfig) -> list[TestReport]:
    """Visit-duration law: chord-time CDF per target, cumulative structure."""
    out = _prepare(cfg)
    lt_window = float(cfg.opt("lt_window", 40.0))
    reports: list[TestReport] = []
    batches, count_rows, adjudication = [], [], []
    for k, eps in enumerate(cfg.eps_schedule):
        batch = _batch(cfg, eps, k)
        batches.append((eps, batch.events))
        assertive = eps == cfg.eps_min
        new = []
        for t in cfg.targets:
            ev = batch.events[batch.events["j"] == t.label]
            sfx = _suffix(eps, f",j={t.label}")
            dur = ev["duration"] / eps
            law = chord_time_law(t.shape_radius)
            ks = ks_one_sample(dur, law.cdf, name=f"chord_time_ks{sfx}",
                               alpha=cfg.alpha)
            mean_bias = abs(float(dur.mean()) - math.pi * t.shape_radius / 2)
            se = float(dur.std(ddof=1)) / math.sqrt(dur.size)
            bias = threshold_report(
                f"duration_mean_bias{sfx}", mean_bias,
                DURATION_BIAS_PER_EPS * t.shape_radius * eps + 3 * se,
                dur.size, alpha=cfg.alpha)
            if t.kind == "interior":
                new += [ks, bias]
            else:
                # reflections inside the ball shift the law by O(eps); the
                # KS verdict is recorded but only the bias bound is asserted
                new.append(bias)
                log.info("%s boundary chord KS (reported): %s", sfx, ks)
            # cumulative local time per flow window vs compound-Poisson MC
            emp = []
            for k2, rows in batch.per_trajectory():
                sel = rows["j"] == t.label
                n_win = int(batch.t_max / lt_window)
                idx = np.floor_divide(rows["t"][sel], lt_window).astype(int)
                keep = idx < n_win
                acc = np.zeros(n_win)
                np.add.at(acc, idx[keep], rows["duration"][sel][keep] / eps)
                emp.append(acc)
                count_rows += [(eps, k2, wi, t.label, int(c)) for wi, c in
                               enumerate(np.bincount(idx[keep],
                                                     minlength=n_win)[:n_win])]
            emp = np.concatenate(emp)
            lam = ev.size / batch.total_time * lt_window
            rng = as_rng(_seed(cfg, 90, k, t.label))
            counts = rng.poisson(lam, size=emp.size)
            oracle = np.zeros(emp.size)
            draws = law.sampler(int(counts.sum()), rng)
            pos = 0
            for i, c in enumerate(counts):
                if c:
                    oracle[i] = draws[pos:pos + c].sum()
                    pos += c
            new.append(two_sample_ks(emp, oracle,
                                     name=f"cumulative_local_time_ks{sfx}",
                                     alpha=cfg.alpha))
        if assertive:
            reports += new
        adjudication += _rate_rows(cfg, eps, batch)
    write_entries_csv(out / "entries.csv", batches)
    write_counts_csv(out / "counts.csv", count_rows)
    write_json(out / "adjudication.json", adjudication)
    write_reports_json(out / "reports.json", reports)
    return reports


def run_e5(cfg: ExperimentConfig) -> list[TestReport]:
    """Closest-approach law: uniform marks, unit-rate Poissonity in its clock."""
    out = _prepare(cfg)
    window_len = float(cfg.opt("window_len", 8.0))
    reports: list[TestReport] = []
    batches, count_rows, adjudication = [], [], []
    unif = uniform_law()
    for k, eps in enumerate(cfg.eps_schedule):
        batch = _batch(cfg, eps, k)
        batches.append((eps, batch.events))
        assertive = eps == cfg.eps_min
        h = clock_flux(cfg.table, cfg.targets, eps)
        sfx = _suffix(eps)
        rho = cfg.targets[0].shape_radius * eps
        closest = batch.events["closest"] / rho
        new = [ks_one_sample(closest, unif.cdf,
                             name=f"closest_uniform_ks{sfx}", alpha=cfg.alpha)]
        per_traj = [(k2, rows["t"] * h) for k2, rows in batch.per_trajectory()]
        pps = [marked_point_set(ts, np.zeros(ts.size)) for _, ts in per_traj]
        new.append(exp_interarrival([ts for _, ts in per_traj],
                                    name=f"exp_interarrival{sfx}",
                                    alpha=cfg.alpha))
        pooled = []
        for (k2, _ts), pp in zip(per_traj, pps):
            w = window_counts(pp, cfg.t_max * h, window_len)
            pooled.append(w)
            count_rows += [(eps, k2, wi, -1, int(c)) for wi, c in enumerate(w)]
        pooled = np.concatenate(pooled)
        new.append(poisson_dispersion(pooled, name=f"poisson_dispersion{sfx}",
                                      alpha=cfg.alpha))
        # the scaled intensity should be 1 in this clock
        scaled_rate = pooled.mean() / window_len
        new.append(mean_z_report(f"unit_intensity_in_flux_clock{sfx}",
                                 pooled / window_len, 1.0, alpha=cfg.alpha))
        log.info("%s scaled rate in flux clock: %.4f", sfx, scaled_rate)
        if assertive:
            reports += new
        adjudication += _rate_rows(cfg, eps, batch)
    write_entries_csv(out / "entries.csv", batches)
    write_counts_csv(out / "counts.csv", count_rows)
    write_json(out / "adjudication.json", adjudication)
    write_reports_json(out / "reports.json", reports)
    return reports


def run_e6(cfg: ExperimentConfig) -> list[TestReport]:
    """Line process of ball crossings: uniform (r, theta), Poisson counts."""
    out = _prepare(cfg)
    scale = float(cfg.opt("window_scale", 0.5))
    reports: list[TestReport] = []
    batches, count_rows, meta = [], [], []
    for k, eps in enumerate(cfg.eps_schedule):
        batch = _batch(cfg, eps, k)
        batches.append((eps, batch.events))
        assertive = eps == cfg.eps_min
        sfx = _suffix(eps)
        ev = batch.events
        r, theta = line_map_arrays(ev["px"], ev["py"], ev["ux"], ev["uy"])
        new = [
            ks_one_sample(r, uniform_law(-1, 1).cdf, name=f"r_uniform{sfx}",
                          alpha=cfg.alpha),
            ks_one_sample(theta, uniform_law(0, math.pi).cdf,
                          name=f"theta_uniform{sfx}", alpha=cfg.alpha),
            correlation_report(f"r_theta_independence{sfx}", r, theta,
                               alpha=cfg.alpha),
        ]
        w_flow = scale / eps
        counts = []
        for k2, rows in batch.per_trajectory():
            n_win = int(batch.t_max / w_flow)
            idx = np.floor_divide(rows["t"], w_flow).astype(int)
            w = np.bincount(idx[idx < n_win], minlength=n_win)[:n_win]
            counts.append(w)
            count_rows += [(eps, k2, wi, -1, int(c)) for wi, c in enumerate(w)]
        counts = np.concatenate(counts)
        new.append(poisson_dispersion(counts, name=f"line_count_poisson{sfx}",
                                      alpha=cfg.alpha))
        # synthetic comparison at the empirically calibrated intensity
        kappa = counts.mean() / 2.0
        reps = sample_line_process(kappa, counts.size, _seed(cfg, 91, k))
        synth = np.concatenate(reps)
        synth_counts = np.array([x.shape[0] for x in reps])
        new += [
            two_sample_ks(r, synth[:, 0], name=f"r_vs_synthetic{sfx}",
                          alpha=cfg.alpha),
            two_sample_ks(theta, synth[:, 1], name=f"theta_vs_synthetic{sfx}",
                          alpha=cfg.alpha),
            chi2_homogeneity(counts, synth_counts,
                             name=f"counts_vs_synthetic{sfx}", alpha=cfg.alpha),
            ks_one_sample(ev["phi_in"], phi_in_cdf,
                          name=f"incidence_cos_law{sfx}", alpha=cfg.alpha),
        ]
        meta.append({"eps": eps, "kappa_hat": kappa,
                     "mean_lines_per_window": float(counts.mean()),
                     "n_windows": int(counts.size)})
        if assertive:
            reports += new
    write_entries_csv(out / "entries.csv", batches)
    write_counts_csv(out / "counts.csv", count_rows)
    write_json(out / "meta.json", {"windows": meta})
    write_reports_json(out / "reports.json", reports)
    return reports


def run_e7(cfg: ExperimentConfig) -> list[TestReport]:
    """Records functional on synthetic marked Poisson input (no billiard)."""
    out = _prepare(cfg)
    n_rep = int(cfg.opt("n_replicas", 10_000))
    horizon = float(cfg.opt("t_horizon", 12.0))
    n_arr = int(cfg.opt("n_arrivals", 25))
    rng = as_rng(_seed(cfg, 1))

    # record indicators over the first n_arr arrivals of PPP x Unif marks
    marks = rng.random((n_rep, n_arr))
    run_min = np.minimum.accumulate(marks, axis=1)
    ind = np.empty((n_rep, n_arr), dtype=bool)
    ind[:, 0] = True
    ind[:, 1:] = marks[:, 1:] < run_min[:, :-1]
    reports = [threshold_report("first_point_always_record",
                                float(1.0 - ind[:, 0].mean()), 0.0, n_rep,
                                alpha=cfg.alpha)]
    z_max = 0.0
    for ell in range(2, min(n_arr, 20) + 1):
        p0 = 1.0 / ell
        z = abs(ind[:, ell - 1].mean() - p0) / math.sqrt(p0 * (1 - p0) / n_rep)
        z_max = max(z_max, z)
    reports.append(threshold_report("record_prob_one_over_ell_max_z", z_max,
                                    3.0, n_rep, alpha=cfg.alpha))
    # pairwise independence of the indicators, Bonferroni over pairs
    cols = list(range(1, min(n_arr, 20)))
    p_min, z_big = 1.0, 0.0
    n_pairs = 0
    for i, a in enumerate(cols):
        for b in cols[i + 1:]:
            x, y = ind[:, a], ind[:, b]
            r = float(np.corrcoef(x, y)[0, 1])
            z = abs(math.atanh(max(min(r, 0.999999), -0.999999))
                    * math.sqrt(n_rep - 3))
            p_min = min(p_min, 2 * float(special.ndtr(-z)))
            z_big = max(z_big, z)
            n_pairs += 1
    reports.append(make_report("record_indicator_independence", z_big,
                               min(1.0, n_pairs * p_min), n_rep,
                               alpha=cfg.alpha))

    # record-count law on [0, horizon] vs the limit-process sampler
    emp = np.empty(n_rep, dtype=np.int64)
    for i in range(n_rep):
        n_t = rng.poisson(horizon)
        m = rng.random(n_t)
        if n_t == 0:
            emp[i] = 0
            continue
        rm = np.minimum.accumulate(m)
        emp[i] = 1 + int((m[1:] < rm[:-1]).sum())
    oracle_rng = as_rng(_seed(cfg, 2))
    oracle = np.array([sample_record_limit(horizon, oracle_rng).size
                       for _ in range(n_rep)])
    reports.append(chi2_homogeneity(emp, oracle, name="record_count_law",
                                    alpha=cfg.alpha))
    write_counts_csv(out / "counts.csv",
                     [(1.0, i, 0, 0, int(c)) for i, c in enumerate(emp)] +
                     [(1.0, i, 0, 1, int(c)) for i, c in enumerate(oracle)])
    write_reports_json(out / "reports.json", reports)
    return reports


def run_e8(cfg: ExperimentConfig) -> list[TestReport]:
    """Hazard local time: compound-geometric limit of time spent in target 1.

    Two oracles are compared: the compound sum with single-visit law given
    by the chord-time distribution on [0, 2 r_1] (the law every visit
    demonstrably follows, see E4), and the variant built on the normalized
    law r_1 * Y with Y on [0, 1], which is its half-scale copy.  The
    numbers in meta.json quantify the factor-2 separation.
    """
    out = _prepare(cfg)
    eps = cfg.eps_min
    n_trials = int(cfg.opt("n_trials", 5000))
    cap = float(cfg.opt("trial_t_max", 0.9 / eps))
    marg = label_marginal(cfg.targets)
    p = marg[1]
    r1 = {t.label: t for t in cfg.targets}[1].shape_radius
    batch = _batch(cfg, eps, 0, stop_when_all_labels=True,
                   n_trajectories=n_trials, t_max=cap)
    trials = _trial_table(batch)
    ok = ~trials["trunc0"] & ~trials["discarded"]
    mprime = trials["local_time"][ok] / eps

    y_law = hazard_Y_law()
    rng = as_rng(_seed(cfg, 3))
    counts = rng.geometric(1.0 - p, size=mprime.size) - 1
    draws = y_law.sampler(int(counts.sum()), rng)
    sums = np.zeros(mprime.size)
    pos = 0
    for i, c in enumerate(counts):
        if c:
            sums[i] = draws[pos:pos + c].sum()
            pos += c
    oracle_y = r1 * sums
    oracle_chord = 2.0 * r1 * sums

    atom = float((mprime == 0).mean())
    reports = [
        two_sample_ks(mprime, oracle_y,
                      name=f"compound_ks_y_oracle{_suffix(eps)}",
                      alpha=cfg.alpha),
        two_sample_ks(mprime, oracle_chord,
                      name=f"compound_ks_chord_oracle{_suffix(eps)}",
                      alpha=cfg.alpha),
        threshold_report(f"zero_atom_abs_error{_suffix(eps)}",
                         abs(atom - (1.0 - p)), 0.02, mprime.size,
                         alpha=cfg.alpha),
        mean_z_report(f"mean_wald_chord{_suffix(eps)}", mprime,
                      2.0 * r1 * (math.pi / 4) * p / (1 - p), alpha=cfg.alpha),
    ]
    write_trials_csv(out / "trials.csv",
                     [(eps, k, int(trials[k]["m"]), int(trials[k]["m_swap"]),
                       bool(trials[k]["trunc0"] or trials[k]["discarded"]),
                       float(trials[k]["local_time"]))
                      for k in range(n_trials)])
    write_json(out / "meta.json", {
        "zero_atom": atom, "expected_zero_atom": 1.0 - p,
        "mean_mprime": float(mprime.mean()),
        "mean_y_oracle": float(oracle_y.mean()),
        "mean_chord_oracle": float(oracle_chord.mean()),
        "y_over_chord_scale": 0.5,
        "n_used": int(mprime.size)})
    write_reports_json(out / "reports.json", reports)
    return reports


RUNNERS = {"E1": run_e1, "E2": run_e2, "E3": run_e3, "E4": run_e4,
           "E5": run_e5, "E6": run_e6, "E7": run_e7, "E8": run_e8}


def run(cfg: ExperimentConfig) -> int:
    """Run one experiment; exit code 0 iff all asserted reports passed."""
    reports = RUNNERS[cfg.experiment](cfg)
    failed = [r for r in reports if not r.passed]
    for r in reports:
        log.info("%-8s %s: stat=%.6g p=%.4g n=%d",
                 "PASS" if r.passed else "FAIL", r.test_name, r.statistic,
                 r.p_value, r.n)
    return 0 if not failed else 1
