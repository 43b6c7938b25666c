"""Command-line entry point.

Machine-first output: one JSON record on stdout per run, CSV side files
for traces and plot data. Exit codes: 0 success, 1 usage or config
error, 2 numerical non-convergence or partial result.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .attractor import box_dimension, chaos_game, cylinder_cover
from .config import RunConfig, build_family, bundled_config, load_config
from .dimension import hausdorff_dimension, pressure
from .errors import (
    BudgetExceededError,
    ConfigError,
    IfsError,
    NoRootInRangeError,
    NonConvergenceError,
    SummabilityError,
)
from .separation import OpenSetCandidate, check_strong, moran_necessary, suggest_open_set
from .transfer import Potential, perron_pair

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; usage errors are 1 here
        self.print_usage(sys.stderr)
        raise SystemExit(_fail(f"{self.prog}: {message}"))


def _fail(message: str, code: int = EXIT_USAGE) -> int:
    print(message, file=sys.stderr)
    return code


def _emit(record: dict) -> None:
    print(json.dumps(record, sort_keys=True))


def _write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(v) for v in row) + "\n")


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _load(args) -> RunConfig:
    if args.config is None:
        raise ConfigError("--config PATH is required (a file path or bundled:<name>)")
    if str(args.config).startswith("bundled:"):
        return bundled_config(str(args.config).split(":", 1)[1])
    return load_config(args.config)


def _apply_overrides(cfg: RunConfig, args) -> None:
    num = cfg.numerics
    if args.seed is not None:
        num["seed"] = args.seed
    if args.grid is not None:
        num["grid"] = args.grid
    if args.truncate is not None:
        num["truncation"] = args.truncate
    if args.depth is not None:
        num["depth"] = args.depth
    if args.tol is not None:
        num["tol"] = args.tol
    if args.workers is not None:
        num["workers"] = args.workers


def cmd_dim(cfg: RunConfig, args) -> int:
    family = build_family(cfg)
    num = cfg.numerics
    dim = cfg.section("dim")
    result = hausdorff_dimension(
        family,
        tol=num["tol"],
        depth=num["depth"],
        truncation=num["truncation"],
        depth_max=dim["depth_max"],
        s_hi=dim["s_hi"],
        theta_margin=dim["theta_margin"],
        grid=num["grid"],
    )
    record = result.to_dict()
    record["tolerance"] = num["tol"]
    _emit(record)
    return EXIT_OK if result.converged else EXIT_NUMERIC


def cmd_eigen(cfg: RunConfig, args) -> int:
    family = build_family(cfg)
    num = cfg.numerics
    exponent = cfg.section("eigen")["exponent"]
    if exponent is None:
        raise ConfigError("[eigen] exponent is required for cmd_eigen")
    pd = perron_pair(
        family,
        Potential.geometric(exponent),
        truncation=num["truncation"],
        grid=num["grid"],
        tol=num["tol_h"],
        tol_rho=num["tol_rho"],
        tol_mu=num["tol_mu"],
        max_iter=num["max_iter"],
    )
    if args.trace:
        _write_csv(
            args.trace,
            ["iteration", "rho_lower", "rho_upper", "sup_residual"],
            pd.trace,
        )
    if args.emit_plot_data:
        out = Path(args.emit_plot_data)
        _write_csv(out / "h.csv", ["x", "h"], zip(pd.h.nodes, pd.h.values))
        _write_csv(out / "mu.csv", ["x", "mass"], zip(pd.mu.positions, pd.mu.masses))
    _emit(
        {
            "exponent": exponent,
            "rho": pd.rho,
            "rho_bracket": list(pd.rho_bracket),
            "pairing": pd.pairing,
            "sup_residual": pd.sup_residual,
            "tail_bound": pd.tail_bound,
            "analytic_tail": pd.analytic_tail,
            "iterations": pd.iterations,
            "grid": pd.grid,
            "truncation": pd.truncation,
            "h_min": float(pd.h.values.min()),
            "h_max": float(pd.h.values.max()),
        }
    )
    return EXIT_OK


def cmd_pressure(cfg: RunConfig, args) -> int:
    family = build_family(cfg)
    num = cfg.numerics
    sec = cfg.section("pressure")
    if sec["s_values"] is not None:
        s_values = [float(s) for s in sec["s_values"]]
    elif sec["s_min"] is not None and sec["s_max"] is not None:
        s_values = list(np.linspace(sec["s_min"], sec["s_max"], sec["count"]))
    else:
        raise ConfigError("[pressure] needs s_values or s_min/s_max")
    depth = sec["depth"] if sec["depth"] is not None else num["depth"]

    def one(s: float) -> dict:
        try:
            pp = pressure(
                family,
                s,
                depth=depth,
                truncation=num["truncation"],
                grid=num["grid"],
                tol_rho=num["tol_rho"],
            )
            return pp.to_dict()
        except SummabilityError:
            return {"s": s, "status": "divergent"}

    workers = num["workers"] or None
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, s_values))
    else:
        rows = [one(s) for s in s_values]

    csv_rows = [
        (
            r["s"],
            r.get("lower", "divergent"),
            r.get("log_rho", "divergent"),
            r.get("upper", "divergent"),
        )
        for r in rows
    ]
    if args.emit_plot_data:
        _write_csv(
            Path(args.emit_plot_data) / "pressure.csv",
            ["s", "lower", "log_rho", "upper"],
            csv_rows,
        )
    _emit({"rows": rows, "depth": depth, "truncation": num["truncation"]})
    return EXIT_OK


def cmd_osc(cfg: RunConfig, args) -> int:
    family = build_family(cfg)
    sec = cfg.section("osc")
    level = sec["level"]
    if args.suggest or sec["suggest"]:
        cand = suggest_open_set(family, level)
        if cand is None:
            _emit({"level": level, "suggested": None})
            return EXIT_OK
        candidate = cand
    elif sec["candidate"] is not None:
        candidate = OpenSetCandidate(tuple((float(a), float(b)) for a, b in sec["candidate"]))
    else:
        raise ConfigError("[osc] needs candidate intervals or suggest = true")
    report = check_strong(family, level, candidate)
    try:
        moran = moran_necessary(family, level, d=sec["moran_exponent"])
        report.moran_passed = moran.passed
        report.moran_sum = moran.total
        report.moran_c1 = moran.c1
    except IfsError:
        pass  # no certified distortion constant; Moran test not applicable
    record = report.to_dict()
    record["candidate"] = [list(iv) for iv in candidate.intervals]
    _emit(record)
    return EXIT_OK


def cmd_attractor(cfg: RunConfig, args) -> int:
    family = build_family(cfg)
    num = cfg.numerics
    sec = cfg.section("attractor")
    truncation = num["truncation"]
    if truncation is None and family.n_maps is None:
        raise ConfigError("[numerics] truncation is required for infinite families")
    cloud = chaos_game(
        family,
        truncation=truncation,
        count=sec["count"],
        word_length=sec["word_length"],
        seed=num["seed"],
        dim_exponent=sec["weights_exponent"],
    )
    cover = cylinder_cover(family, truncation=truncation, depth=min(num["depth"], 12))
    record = {
        "count": len(cloud),
        "word_length": cloud.word_length,
        "seed": cloud.seed,
        "error_bound": cloud.error_bound,
        "points_min": float(cloud.points.min()),
        "points_max": float(cloud.points.max()),
        "cover_entries": len(cover.entries),
        "cover_max_diameter": cover.max_diameter,
        "cover_complete": cover.complete,
        "uncovered_tail": cover.uncovered_tail,
    }
    if sec["scales"] is not None:
        box = box_dimension(cloud, [float(s) for s in sec["scales"]])
        record["box"] = {
            "slope": box.slope,
            "residual": box.residual,
            "scales": list(box.scales),
            "counts": list(box.counts),
            "degenerate": box.degenerate,
        }
    if args.emit_plot_data:
        out = Path(args.emit_plot_data)
        _write_csv(out / "points.csv", ["x"], ((x,) for x in cloud.points))
        _write_csv(
            out / "cover.csv",
            ["word", "left", "right", "diameter"],
            (
                ("".join(str(s) for s in e.word) or "-", e.lo, e.hi, e.diameter)
                for e in cover.entries
            ),
        )
    _emit(record)
    return EXIT_OK


_COMMANDS = {
    "dim": cmd_dim,
    "eigen": cmd_eigen,
    "pressure": cmd_pressure,
    "osc": cmd_osc,
    "attractor": cmd_attractor,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="ifslab",
        description="Transfer-operator computations for conformal IFS on an interval",
    )
    parser.add_argument("--version", action="version", version=f"ifslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=False, help="config file path or bundled:<name>")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--grid", type=int, default=None, metavar="M")
        p.add_argument("--truncate", type=int, default=None, metavar="N")
        p.add_argument("--depth", type=int, default=None, metavar="n")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--trace", default=None, metavar="PATH")
        p.add_argument("--emit-plot-data", default=None, metavar="DIR")
        p.add_argument("--workers", type=int, default=None, metavar="K")
        if name == "osc":
            p.add_argument("--suggest", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _load(args)
        _apply_overrides(cfg, args)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        return _fail(f"config error: {exc}", EXIT_USAGE)
    except NoRootInRangeError as exc:
        _emit({"error": "no-root-in-range", "detail": str(exc),
               "psi_low": exc.psi_low, "psi_high": exc.psi_high})
        return EXIT_NUMERIC
    except NonConvergenceError as exc:
        _emit({"error": "non-convergence", "detail": str(exc),
               "bracket": list(exc.bracket) if exc.bracket else None,
               "iterations": exc.iterations,
               "residual": exc.residual if exc.residual is None or math.isfinite(exc.residual) else None})
        return EXIT_NUMERIC
    except (BudgetExceededError, SummabilityError) as exc:
        _emit({"error": type(exc).__name__, "detail": str(exc)})
        return EXIT_NUMERIC
    except IfsError as exc:
        return _fail(f"error: {exc}", EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
