"""Command line: ``sweep``, ``verify``, ``point`` and ``compare``.

Exit codes: 0 success, 1 usage error, 2 tolerance failure, 3 more than 1% of
grid cells failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from importlib import resources
from pathlib import Path

from .engine import qslt, qslt_for
from .errors import DomainError, NearDegenerateRoots
from .model import ModelConfig, time_grid
from .oracle import integrate_kernel
from .sweep import (
    AMPLITUDE_TOL,
    FAILED_CELL_LIMIT,
    compare_topologies,
    emit_outputs,
    make_spec,
    run_sweep,
    verify,
)

EXIT_OK, EXIT_USAGE, EXIT_TOLERANCE, EXIT_PARTIAL = 0, 1, 2, 3

log = logging.getLogger("ancilla_qsl")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def resolve_config(name):
    """A path, or the stem of a bundled config such as ``fig1``."""
    if name is None:
        return None
    path = Path(name)
    if path.exists():
        return path
    bundled = resources.files("ancilla_qsl") / "configs" / f"{path.stem}.cfg"
    if bundled.is_file():
        return Path(str(bundled))
    raise DomainError(f"config file {name!r} not found")


def _grid_args(p):
    p.add_argument("--config", help="flat key=value file, or fig1/fig2/fig3")
    p.add_argument("--topology", help="id, common or sys")
    p.add_argument("--gamma0", help="min:max:steps")
    p.add_argument("--J", dest="J", help="min:max:steps")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--n-points", dest="n_points", type=int, help="time samples on [0, tau]")
    p.add_argument("--oracle", choices=["off", "kernel", "discrete"])


def build_parser():
    parser = _Parser(prog="ancilla-qsl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep", help="evaluate tau_qsl/tau over a (gamma0, J) grid")
    _grid_args(p)
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    p.add_argument("--no-plot", action="store_true", help="skip the gnuplot script")

    p = sub.add_parser("verify", help="compare closed forms with the oracles")
    _grid_args(p)
    p.add_argument("--samples", type=int, default=4, help="grid values sampled per axis")
    p.add_argument("--all-topologies", action="store_true", help="ignore --topology and check all three")
    p.add_argument("--h-c-reading", dest="common_reading", choices=["cosh", "cos"],
                   help="closed form used for the common bath (cos reproduces the misprint)")

    p = sub.add_parser("point", help="print one QsltResult as JSON")
    p.add_argument("--topology", default="id")
    p.add_argument("--gamma0", type=float, required=True)
    p.add_argument("--J", dest="J", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=2.0)
    p.add_argument("--tau", type=float, default=3.0)
    p.add_argument("--n-points", dest="n_points", type=int, default=2001)
    p.add_argument("--oracle", choices=["off", "kernel"], default="off")

    p = sub.add_parser("compare", help="ratios of the three topologies at matched parameters")
    p.add_argument("--gamma0", type=float, nargs="+", default=[1.0, 5.0, 10.0])
    p.add_argument("--J", dest="J", type=float, nargs="+", default=[1.0, 3.0, 5.0])
    p.add_argument("--lambda", dest="lam", type=float, default=2.0)
    p.add_argument("--tau", type=float, default=3.0)
    return parser


def _spec_from(args, **extra):
    keys = ("topology", "gamma0", "J", "lam", "tau", "n_points", "oracle")
    overrides = {k: getattr(args, k, None) for k in keys}
    overrides.update(extra)
    return make_spec(resolve_config(args.config), **overrides)


def cmd_sweep(args):
    spec = _spec_from(args, threads=args.threads, out=args.out)
    grid = run_sweep(spec)
    files = emit_outputs(grid, spec.out, plot=not args.no_plot)
    print(f"{len(grid.cells)} cells in {grid.elapsed:.2f}s -> {files['csv']}")
    if grid.failed_fraction > FAILED_CELL_LIMIT:
        print(f"{grid.failed_fraction:.1%} of cells failed", file=sys.stderr)
        return EXIT_PARTIAL
    if spec.oracle != "off":
        tol = AMPLITUDE_TOL if spec.oracle == "kernel" else 1e-3
        worst = max((c.oracle_amplitude_dev for c in grid.cells if not math.isnan(c.oracle_amplitude_dev)),
                    default=0.0)
        print(f"max oracle amplitude deviation {worst:.3e} (tol {tol:.0e})")
        if worst > tol:
            return EXIT_TOLERANCE
    return EXIT_OK


def cmd_verify(args):
    spec = _spec_from(args, common_reading=args.common_reading)
    explicit = args.topology is not None and not args.all_topologies
    topologies = [spec.topology] if explicit else ["id", "common", "sys"]
    report = verify(spec, samples=args.samples, topologies=topologies)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_TOLERANCE


def cmd_point(args):
    cfg = ModelConfig.build(args.topology, args.gamma0, args.J, args.lam, args.tau)
    out = {"topology": cfg.topology.value, "gamma0": cfg.gamma0, "J": cfg.J, "lambda": cfg.lam, "tau": cfg.tau}
    try:
        res = qslt_for(cfg, "analytic", args.n_points)
    except NearDegenerateRoots:
        res = qslt_for(cfg, "kernel", args.n_points)
        out["fallback"] = "kernel"
    out["result"] = res.to_dict()
    if args.oracle == "kernel":
        ref = qslt(integrate_kernel(cfg, time_grid(cfg.tau, args.n_points)))
        out["oracle"] = {"ratio": ref.ratio, "ratio_dev": abs(ref.ratio - res.ratio)}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_compare(args):
    rows = compare_topologies(args.gamma0, args.J, args.lam, args.tau)
    print("gamma0,J,id,common,sys")
    for r in rows:
        print(f"{r['gamma0']:g},{r['J']:g},{r['id']:.10f},{r['common']:.10f},{r['sys']:.10f}")
    held = sum(r["common"] <= r["id"] for r in rows)
    faster = sum(r["sys"] < r["id"] for r in rows)
    print(f"# common <= id at {held}/{len(rows)} points; sys < id at {faster}/{len(rows)} points")
    return EXIT_OK


COMMANDS = {"sweep": cmd_sweep, "verify": cmd_verify, "point": cmd_point, "compare": cmd_compare}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
