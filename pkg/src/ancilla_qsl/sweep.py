"""(gamma0, J) parameter sweeps, verification runs and output files."""
from __future__ import annotations

import configparser
import json
import logging
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import amplitude_common, amplitude_common_literal, analytic_trajectory, solve_cubic
from .engine import qslt, qslt_for
from .errors import DomainError, NearDegenerateRoots, QslError, ToleranceExceeded
from .model import ModelConfig, Topology, time_grid
from .oracle import DiscreteBath, integrate_discrete_bath, integrate_kernel

log = logging.getLogger(__name__)

CSV_HEADER = "topology,lambda,tau,gamma0,J,ratio,tau_qsl,tight_norm,flags"
AMPLITUDE_TOL = 1e-7
RATIO_TOL = 1e-6
DISCRETE_TOL = 1e-3
FAILED_CELL_LIMIT = 0.01
ORACLES = ("off", "kernel", "discrete")


@dataclass(frozen=True)
class AxisRange:
    lo: float
    hi: float
    steps: int

    @classmethod
    def parse(cls, text) -> "AxisRange":
        if isinstance(text, AxisRange):
            return text
        parts = str(text).split(":")
        if len(parts) != 3:
            raise DomainError(f"range must look like min:max:steps, got {text!r}")
        return cls(float(parts[0]), float(parts[1]), int(parts[2]))

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)

    def __str__(self):
        return f"{self.lo!r}:{self.hi!r}:{self.steps}"


@dataclass(frozen=True)
class SweepSpec:
    topology: Topology = Topology.INDEPENDENT
    gamma0: AxisRange = AxisRange(0.1, 10.0, 50)
    J: AxisRange = AxisRange(0.0, 10.0, 50)
    lam: float = 2.0
    tau: float = 3.0
    n_points: int = 2001
    oracle: str = "off"
    out: str = "out"
    threads: int = 1
    cap: float = 20.0
    n_modes: int = 1024
    half_width: float = 40.0
    common_reading: str = "cosh"

    def __post_init__(self):
        object.__setattr__(self, "topology", Topology.parse(self.topology))
        object.__setattr__(self, "gamma0", AxisRange.parse(self.gamma0))
        object.__setattr__(self, "J", AxisRange.parse(self.J))
        for name in ("gamma0", "J"):
            ax = getattr(self, name)
            if ax.steps < 2:
                raise DomainError(f"{name} axis needs at least 2 steps")
            if ax.lo < 0 or ax.hi < ax.lo:
                raise DomainError(f"{name} range must satisfy 0 <= min <= max")
            if ax.hi > self.cap:
                raise DomainError(f"{name} max {ax.hi} exceeds the safety cap {self.cap}")
        if not self.lam > 0 or not self.tau > 0:
            raise DomainError("lambda and tau must be positive")
        if self.oracle not in ORACLES:
            raise DomainError(f"oracle must be one of {ORACLES}")
        if self.threads < 1:
            raise DomainError("threads must be >= 1")
        if self.n_points < 5:
            raise DomainError("n_points must be >= 5")
        if self.common_reading not in ("cosh", "cos"):
            raise DomainError("common_reading must be cosh or cos")

    def config(self, gamma0: float, J: float, topology=None) -> ModelConfig:
        return ModelConfig.build(topology or self.topology, gamma0, J, self.lam, self.tau)

    def to_dict(self):
        d = asdict(self)
        d["topology"] = self.topology.value
        d["gamma0"] = str(self.gamma0)
        d["J"] = str(self.J)
        return d


_KEYS = {
    "topology": str, "gamma0": AxisRange.parse, "j": AxisRange.parse, "lambda": float, "lam": float,
    "tau": float, "n_points": int, "oracle": str, "out": str, "threads": int, "cap": float,
    "n_modes": int, "half_width": float, "common_reading": str,
}
_FIELD = {"j": "J", "lambda": "lam"}


def read_config(path) -> dict:
    """Flat ``key = value`` file; an optional ``[sweep]`` header is accepted."""
    text = Path(path).read_text()
    if not text.lstrip().startswith("["):
        text = "[sweep]\n" + text
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.read_string(text)
    section = parser["sweep"] if parser.has_section("sweep") else parser[parser.sections()[0]]
    out = {}
    for key, raw in section.items():
        k = key.strip().lower()
        if k not in _KEYS:
            raise DomainError(f"{path}: unknown key {key!r}")
        out[_FIELD.get(k, k)] = _KEYS[k](raw.strip())
    return out


def make_spec(config_path=None, **overrides) -> SweepSpec:
    """Defaults, then the config file, then non-None overrides."""
    values = read_config(config_path) if config_path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return SweepSpec(**values)


@dataclass(frozen=True)
class Cell:
    gamma0: float
    J: float
    ratio: float
    tau_qsl: float
    tight_norm: str
    flags: tuple = ()
    rate_op: float = math.nan
    rate_tr: float = math.nan
    rate_hs: float = math.nan
    oracle_amplitude_dev: float = math.nan
    oracle_ratio_dev: float = math.nan

    @property
    def failed(self) -> bool:
        return any(f.startswith("failed") for f in self.flags)


def _needs_fallback(cfg: ModelConfig) -> bool:
    if cfg.topology is not Topology.SYSTEM_ONLY or cfg.J == 0.0:
        return False
    return solve_cubic(cfg.J, cfg.lam, cfg.gamma0).ill_conditioned


def evaluate_cell(spec: SweepSpec, gamma0: float, J: float) -> Cell:
    """One grid point; failures come back as flagged cells."""
    flags = []
    try:
        cfg = spec.config(gamma0, J)
        source = "analytic"
        if _needs_fallback(cfg):
            source = "kernel"
            flags.append("degenerate_roots")
        try:
            res = qslt_for(cfg, source, spec.n_points)
        except NearDegenerateRoots:
            flags.append("degenerate_roots")
            source = "kernel"
            res = qslt_for(cfg, source, spec.n_points)
        amp_dev = ratio_dev = math.nan
        if spec.oracle != "off":
            grid = time_grid(cfg.tau, spec.n_points)
            if spec.oracle == "kernel":
                ref = integrate_kernel(cfg, grid)
            else:
                ref = integrate_discrete_bath(cfg, DiscreteBath.lorentzian(cfg.spectral, spec.n_modes, spec.half_width), grid)
            mine = analytic_trajectory(cfg, grid) if source == "analytic" else integrate_kernel(cfg, grid)
            amp_dev = float(np.max(np.abs(mine.a - ref.a)))
            ratio_dev = abs(qslt(ref).ratio - res.ratio)
        flags.extend(res.flags)
        return Cell(gamma0, J, res.ratio, res.tau_qsl, res.tight_norm, tuple(flags),
                    res.rate_op, res.rate_tr, res.rate_hs, amp_dev, ratio_dev)
    except QslError as exc:
        log.warning("cell gamma0=%r J=%r failed: %s", gamma0, J, exc)
        flags.append(f"failed:{type(exc).__name__}")
        return Cell(gamma0, J, math.nan, math.nan, "", tuple(flags))


@dataclass(frozen=True, eq=False)
class SweepGrid:
    spec: SweepSpec
    gamma0: np.ndarray
    J: np.ndarray
    cells: tuple
    elapsed: float = field(default=0.0, compare=False)

    @property
    def ratio(self) -> np.ndarray:
        """Ratio matrix, rows indexed by gamma0 and columns by J."""
        return np.array([c.ratio for c in self.cells]).reshape(self.gamma0.size, self.J.size)

    @property
    def failed_fraction(self) -> float:
        return sum(c.failed for c in self.cells) / len(self.cells)

    def cell(self, i: int, j: int) -> Cell:
        return self.cells[i * self.J.size + j]


def run_sweep(spec: SweepSpec) -> SweepGrid:
    """Evaluate every (gamma0, J) cell; order and values do not depend on ``threads``."""
    g_axis, j_axis = spec.gamma0.values(), spec.J.values()
    points = [(g, j) for g in g_axis for j in j_axis]
    start = time.perf_counter()
    if spec.threads == 1:
        cells = [evaluate_cell(spec, g, j) for g, j in points]
    else:
        chunk = max(1, len(points) // (4 * spec.threads))
        chunks = [points[i:i + chunk] for i in range(0, len(points), chunk)]
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            parts = pool.map(lambda pts: [evaluate_cell(spec, g, j) for g, j in pts], chunks)
            cells = [c for part in parts for c in part]
    return SweepGrid(spec, g_axis, j_axis, tuple(cells), time.perf_counter() - start)


# -- output -------------------------------------------------------------------

def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.17e}"


def csv_text(grid: SweepGrid) -> str:
    spec = grid.spec
    lines = [CSV_HEADER]
    for c in grid.cells:
        lines.append(",".join([
            spec.topology.value, _fmt(spec.lam), _fmt(spec.tau), _fmt(c.gamma0), _fmt(c.J),
            _fmt(c.ratio), _fmt(c.tau_qsl), c.tight_norm, ";".join(c.flags),
        ]))
    return "\n".join(lines) + "\n"


PLOT_TEMPLATE = """\
# gnuplot script: heatmap of tau_qsl/tau over (J, gamma0)
set datafile separator ','
set terminal pngcairo size 800,640
set output '{png}'
set title 'tau_qsl / tau ({topology}, lambda = {lam}, tau = {tau})'
set xlabel 'J'
set ylabel 'gamma0'
set cblabel 'tau_qsl / tau'
set cbrange [0:1]
set palette rgbformulae 33,13,10
set view map
plot '{csv}' every ::1 using 5:4:6 with image notitle
"""


def emit_outputs(grid: SweepGrid, path, plot: bool = True, stem: str | None = None) -> dict:
    """Write CSV, optional gnuplot script, and a JSON manifest into directory ``path``."""
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        stem = stem or f"qsl_{grid.spec.topology.value}"
        files = {"csv": out / f"{stem}.csv", "manifest": out / f"{stem}.json"}
        files["csv"].write_text(csv_text(grid))
        if plot:
            files["plot"] = out / f"{stem}.gp"
            files["plot"].write_text(PLOT_TEMPLATE.format(
                png=f"{stem}.png", csv=files["csv"].name, topology=grid.spec.topology.value,
                lam=grid.spec.lam, tau=grid.spec.tau))
        manifest = {
            "spec": grid.spec.to_dict(),
            "versions": {"ancilla_qsl": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": __import__("scipy").__version__},
            "timings": {"sweep_seconds": grid.elapsed, "written": time.strftime("%Y-%m-%dT%H:%M:%S")},
            "cells": len(grid.cells),
            "failed_cells": [[c.gamma0, c.J, list(c.flags)] for c in grid.cells if c.failed],
            "flagged_cells": sum(bool(c.flags) for c in grid.cells),
        }
        files["manifest"].write_text(json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"writing outputs to {out}: {exc}") from exc
    return files


# -- verification -------------------------------------------------------------

@dataclass
class Comparison:
    topology: str
    gamma0: float
    J: float
    amplitude_dev: float
    ratio_dev: float
    route: str = "kernel"

    @property
    def tolerance(self) -> float:
        return DISCRETE_TOL if self.route == "discrete" else AMPLITUDE_TOL

    @property
    def ok(self) -> bool:
        ratio_ok = self.route == "discrete" or math.isnan(self.ratio_dev) or self.ratio_dev <= RATIO_TOL
        return self.amplitude_dev <= self.tolerance and ratio_ok


@dataclass
class VerificationReport:
    comparisons: list
    typo_cosh_dev: float
    typo_cos_dev: float
    ordering: list = field(default_factory=list)

    @property
    def max_amplitude_dev(self) -> float:
        return max((c.amplitude_dev for c in self.comparisons if c.route == "kernel"), default=0.0)

    @property
    def max_ratio_dev(self) -> float:
        return max((c.ratio_dev for c in self.comparisons if not math.isnan(c.ratio_dev)), default=0.0)

    @property
    def typo_resolved(self) -> bool:
        return self.typo_cosh_dev <= AMPLITUDE_TOL and self.typo_cos_dev > 1e-2

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.comparisons)

    @property
    def worst(self):
        bad = [c for c in self.comparisons if not c.ok]
        pool = bad or self.comparisons
        return max(pool, key=lambda c: c.amplitude_dev / c.tolerance) if pool else None

    def raise_for_failure(self):
        if not self.passed:
            w = self.worst
            raise ToleranceExceeded(
                f"{w.topology} at gamma0={w.gamma0!r}, J={w.J!r}: amplitude deviation "
                f"{w.amplitude_dev:.3e}, ratio deviation {w.ratio_dev:.3e}", worst=w)

    def lines(self):
        out = []
        for c in self.comparisons:
            out.append(f"{'PASS' if c.ok else 'FAIL'} {c.route:8s} {c.topology:6s} gamma0={c.gamma0:<8.4g} "
                       f"J={c.J:<8.4g} amp_dev={c.amplitude_dev:.3e} ratio_dev={c.ratio_dev:.3e}")
        out.append(f"max amplitude deviation {self.max_amplitude_dev:.3e} (tol {AMPLITUDE_TOL:.0e}), "
                   f"max ratio deviation {self.max_ratio_dev:.3e} (tol {RATIO_TOL:.0e})")
        out.append(f"h_c reading at (gamma0, J, lambda, t) = (1, 1, 2, 2): cosh dev {self.typo_cosh_dev:.3e}, "
                   f"cos dev {self.typo_cos_dev:.3e} -> {'cosh' if self.typo_resolved else 'UNRESOLVED'}")
        for row in self.ordering:
            out.append("ordering gamma0={gamma0:g} J={J:g}: id={id:.6f} common={common:.6f} sys={sys:.6f}".format(**row))
        out.append("PASS" if self.passed else "FAIL")
        return out


def _sample_axis(values: np.ndarray, k: int) -> np.ndarray:
    idx = np.unique(np.linspace(0, values.size - 1, min(k, values.size)).round().astype(int))
    return values[idx]


def typo_experiment(gamma0=1.0, J=1.0, lam=2.0, t=2.0):
    """Deviation of the cosh and the literal cos reading of h_c from the kernel oracle at one time."""
    cfg = ModelConfig.build("common", gamma0, J, lam, tau=t)
    ref = integrate_kernel(cfg, np.array([0.0, t])).a[-1]
    return abs(amplitude_common(t, cfg) - ref), abs(amplitude_common_literal(t, cfg) - ref)


def compare_topologies(gammas=(1.0, 5.0, 10.0), Js=(1.0, 3.0, 5.0), lam=2.0, tau=3.0, n_points=2001):
    """Ratios of all three topologies at matched parameters."""
    rows = []
    for g in gammas:
        for j in Js:
            row = {"gamma0": g, "J": j}
            for topo in Topology:
                cfg = ModelConfig.build(topo, g, j, lam, tau)
                try:
                    row[topo.value] = qslt_for(cfg, "analytic", n_points).ratio
                except NearDegenerateRoots:
                    row[topo.value] = qslt_for(cfg, "kernel", n_points).ratio
            if row["common"] > row["id"]:
                log.warning("common-bath ratio exceeds independent-bath ratio at gamma0=%g J=%g", g, j)
            rows.append(row)
    return rows


def verify(spec: SweepSpec, samples: int = 4, topologies=None) -> VerificationReport:
    """Analytic versus oracle on a subsample of the sweep grid.

    Runs the kernel comparison always, and the discrete-bath comparison as
    well when ``spec.oracle == 'discrete'``.
    """
    topologies = [Topology.parse(t) for t in (topologies or [spec.topology])]
    comps = []
    for topo in topologies:
        for g in _sample_axis(spec.gamma0.values(), samples):
            for j in _sample_axis(spec.J.values(), samples):
                cfg = spec.config(g, j, topo)
                grid = time_grid(cfg.tau, spec.n_points)
                ref = integrate_kernel(cfg, grid)
                if topo is Topology.COMMON and spec.common_reading == "cos":
                    a = amplitude_common_literal(grid, cfg)
                    comps.append(Comparison(topo.value, g, j, float(np.max(np.abs(a - ref.a))), math.nan))
                    continue
                try:
                    mine = analytic_trajectory(cfg, grid)
                except NearDegenerateRoots:
                    log.info("skipping degenerate cell gamma0=%g J=%g", g, j)
                    continue
                comps.append(Comparison(topo.value, g, j, float(np.max(np.abs(mine.a - ref.a))),
                                        abs(qslt(mine).ratio - qslt(ref).ratio)))
                if spec.oracle == "discrete":
                    bath = DiscreteBath.lorentzian(cfg.spectral, spec.n_modes, spec.half_width)
                    disc = integrate_discrete_bath(cfg, bath, grid)
                    comps.append(Comparison(topo.value, g, j, float(np.max(np.abs(disc.a - ref.a))),
                                            abs(qslt(disc).ratio - qslt(ref).ratio), "discrete"))
    cosh_dev, cos_dev = typo_experiment()
    ordering = compare_topologies(lam=spec.lam, tau=spec.tau) if len(topologies) == len(Topology) else []
    return VerificationReport(comps, cosh_dev, cos_dev, ordering)
