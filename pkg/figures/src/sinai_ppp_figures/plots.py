"""Figure builders over the experiment CSV outputs.

Every builder reads CSVs only (no simulation), draws one figure, and
returns the plotted arrays; the CLI hashes those arrays next to the image
so regeneration is verifiable independently of renderer byte noise.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

ENTRY_COLUMNS = ("eps", "traj_id", "t", "j", "p_angle", "u_angle",
                 "duration", "closest")

LAWS = ("chord", "closest", "phi")


@dataclass(frozen=True)
class FigureSpec:
    kind: str                       # cdf | qq | counts | geometric | lines
    inputs: tuple[Path, ...]
    output: Path
    eps: float | None = None        # filter on the eps column
    law: str = "chord"
    label: int | None = None        # filter on the target label column
    shape_radius: float = 1.0
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("cdf", "qq", "counts", "geometric", "lines"):
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if self.kind in ("cdf", "qq") and self.law not in LAWS:
            raise ValueError(f"unknown law {self.law!r}")
        for p in self.inputs:
            if not Path(p).exists():
                raise FileNotFoundError(p)


def read_csv(path: Path, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        missing = set(required) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        rows = list(reader)
    return {name: np.array([float(r[name]) for r in rows])
            for name in (reader.fieldnames or ())}


def _filter(data: dict[str, np.ndarray], spec: FigureSpec) -> dict[str, np.ndarray]:
    sel = np.ones(len(next(iter(data.values()))), dtype=bool)
    if spec.eps is not None and "eps" in data:
        sel &= data["eps"] == spec.eps
    if spec.label is not None and "j" in data:
        sel &= data["j"] == spec.label
    if not sel.any():
        raise ValueError("no rows left after eps/label filtering")
    return {k: v[sel] for k, v in data.items()}


def phi_in_of(data: dict[str, np.ndarray]) -> np.ndarray:
    """Signed incidence angle recovered from the stored mark angles."""
    raw = data["u_angle"] - data["p_angle"] - math.pi
    return np.remainder(raw + math.pi, 2.0 * math.pi) - math.pi


def law_sample_and_cdf(spec: FigureSpec, data: dict[str, np.ndarray]):
    eps = data["eps"]
    if spec.law == "chord":
        x = data["duration"] / eps
        r = spec.shape_radius
        grid = np.linspace(0.0, 2.0 * r, 512)
        cdf = 1.0 - np.sqrt(np.clip(4.0 - (grid / r) ** 2, 0.0, None)) / 2.0
        title = "scaled visit duration vs chord-time law"
    elif spec.law == "closest":
        x = data["closest"] / (eps * spec.shape_radius)
        grid = np.linspace(0.0, 1.0, 512)
        cdf = grid.copy()
        title = "scaled closest approach vs uniform law"
    else:
        x = phi_in_of(data)
        grid = np.linspace(-math.pi / 2, math.pi / 2, 512)
        cdf = 0.5 * (1.0 + np.sin(grid))
        title = "entry incidence angle vs cosine law"
    return np.sort(x), grid, cdf, title


def plot_cdf_overlay(spec: FigureSpec) -> dict[str, np.ndarray]:
    """Empirical CDF steps with the analytic CDF curve on top."""
    data = _filter(read_csv(spec.inputs[0], ENTRY_COLUMNS), spec)
    x, grid, cdf, title = law_sample_and_cdf(spec, data)
    ecdf = np.arange(1, x.size + 1) / x.size
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.step(x, ecdf, where="post", lw=1.0, label=f"empirical (n={x.size})")
    ax.plot(grid, cdf, "k--", lw=1.2, label="analytic")
    ax.set_title(title)
    ax.set_ylabel("CDF")
    ax.legend(loc="lower right", frameon=False)
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return {"sample": x, "grid": grid, "cdf": cdf}


def plot_qq(spec: FigureSpec) -> dict[str, np.ndarray]:
    """Sample quantiles against analytic quantiles (by CDF inversion)."""
    data = _filter(read_csv(spec.inputs[0], ENTRY_COLUMNS), spec)
    x, grid, cdf, title = law_sample_and_cdf(spec, data)
    q = (np.arange(1, x.size + 1) - 0.5) / x.size
    theo = np.interp(q, cdf, grid)
    fig, ax = plt.subplots(figsize=(3.8, 3.8))
    ax.plot(theo, x, ".", ms=2)
    lo, hi = float(grid[0]), float(grid[-1])
    ax.plot([lo, hi], [lo, hi], "k--", lw=1.0)
    ax.set_xlabel("analytic quantile")
    ax.set_ylabel("sample quantile")
    ax.set_title(f"QQ: {title}")
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return {"sample": x, "theoretical": theo}


def plot_counts_hist(spec: FigureSpec) -> dict[str, np.ndarray]:
    """Window-count histogram with the fitted Poisson pmf overlay."""
    data = _filter(read_csv(spec.inputs[0],
                            ("eps", "traj_id", "window_id", "label", "count")),
                   spec)
    counts = data["count"].astype(int)
    lam = counts.mean()
    kmax = int(counts.max()) + 1
    hist = np.bincount(counts, minlength=kmax + 1) / counts.size
    ks = np.arange(kmax + 1)
    pmf = np.exp(-lam) * lam ** ks / np.array(
        [math.factorial(int(k)) for k in ks])
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.bar(ks, hist, width=0.8, label=f"windows (m={counts.size})")
    ax.plot(ks, pmf, "ko--", ms=4, lw=1.0,
            label=f"Poisson(mean={lam:.2f})")
    ax.set_xlabel("entries per window")
    ax.set_ylabel("frequency")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return {"ks": ks.astype(float), "hist": hist, "pmf": pmf}


def plot_geometric_bars(spec: FigureSpec) -> dict[str, np.ndarray]:
    """Hazard-count histogram with the geometric pmf at the label weights."""
    data = read_csv(spec.inputs[0],
                    ("eps", "trial", "m_count", "m_swap", "truncated",
                     "local_time"))
    keep = data["truncated"] == 0
    m = data["m_count"][keep].astype(int)
    p = float(spec.options.get("p", 1.0 / 3.0))
    kmax = int(m.max()) + 1
    hist = np.bincount(m, minlength=kmax + 1) / m.size
    ks = np.arange(kmax + 1)
    pmf = p ** ks * (1 - p)
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.bar(ks, hist, width=0.8, label=f"trials (n={m.size})")
    ax.plot(ks, pmf, "ko--", ms=4, lw=1.0, label=f"geometric(p={p:.3f})")
    ax.set_xlabel("visits to target 1 before target 0")
    ax.set_ylabel("frequency")
    ax.set_yscale("log")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return {"ks": ks.astype(float), "hist": hist, "pmf": pmf}


def chord_endpoints(r: np.ndarray, theta: np.ndarray):
    """Endpoints on the unit circle of the chords x cos t + y sin t = r."""
    nx, ny = np.cos(theta), np.sin(theta)
    half = np.sqrt(np.clip(1.0 - r * r, 0.0, None))
    x0 = r * nx - half * ny
    y0 = r * ny + half * nx
    x1 = r * nx + half * ny
    y1 = r * ny - half * nx
    return x0, y0, x1, y1


def plot_line_process(spec: FigureSpec) -> dict[str, np.ndarray]:
    """Chords of the unit disk cut by the recorded ball crossings.

    Each entries.csv row yields one chord: the entry point at p_angle with
    direction u_angle, i.e. the line at signed distance sin(phi_in) from
    the center.
    """
    data = _filter(read_csv(spec.inputs[0], ENTRY_COLUMNS), spec)
    pa, ua = data["p_angle"], data["u_angle"]
    px, py = np.cos(pa), np.sin(pa)
    ux, uy = np.cos(ua), np.sin(ua)
    nx, ny = -uy, ux
    r = px * nx + py * ny
    theta = np.arctan2(ny, nx)
    flip = theta < 0
    theta = np.where(flip, theta + math.pi, theta)
    r = np.where(flip, -r, r)
    high = theta >= math.pi
    theta = np.where(high, theta - math.pi, theta)
    r = np.where(high, -r, r)
    x0, y0, x1, y1 = chord_endpoints(r, theta)
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    circle = np.linspace(0, 2 * math.pi, 256)
    ax.plot(np.cos(circle), np.sin(circle), "k-", lw=1.2)
    for seg in zip(x0, y0, x1, y1):
        ax.plot([seg[0], seg[2]], [seg[1], seg[3]], "b-", lw=0.5, alpha=0.6)
    ax.set_aspect("equal")
    ax.set_axis_off()
    ax.set_title(f"{r.size} chords")
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return {"r": r, "theta": theta,
            "segments": np.column_stack([x0, y0, x1, y1])}


BUILDERS = {"cdf": plot_cdf_overlay, "qq": plot_qq, "counts": plot_counts_hist,
            "geometric": plot_geometric_bars, "lines": plot_line_process}


def array_hashes(arrays: dict[str, np.ndarray]) -> dict[str, str]:
    return {k: hashlib.sha256(np.ascontiguousarray(
        np.asarray(v, dtype=np.float64)).tobytes()).hexdigest()
        for k, v in arrays.items()}


def render(spec: FigureSpec) -> dict[str, str]:
    """Build the figure, write the plotted-array hashes, return them."""
    Path(spec.output).parent.mkdir(parents=True, exist_ok=True)
    arrays = BUILDERS[spec.kind](spec)
    hashes = array_hashes(arrays)
    sidecar = Path(str(spec.output) + ".hash.json")
    sidecar.write_text(json.dumps(hashes, indent=2, sort_keys=True) + "\n")
    return hashes
