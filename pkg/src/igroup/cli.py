"""Command-line interface.

Subcommands: ``simulate`` (the three seeded studies), ``var`` (VaR
backtesting on CSV or synthetic panels), ``anomaly`` (trajectory
anomaly scoring), ``bandwidth`` (CV bandwidth selection for a
population CSV) and ``weights-dump`` (per-individual weight
diagnostics).

Every run writes its CSV outputs plus a ``manifest.json`` naming them;
CSV floats carry nine significant digits and all ordering is fixed, so
reruns with the same seed are byte-identical regardless of
``--threads``. Exit codes: 0 success, 1 usage/schema problems, 2
numerical failures on well-formed inputs (empty neighborhoods,
degenerate groups, infeasible resampling). Errors print one
machine-parseable line on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .applications import (
    VarConfig,
    anomaly_scores,
    ingest_returns_csv,
    ingest_voyages_csv,
    read_population_csv,
    synthetic_return_panel,
    synthetic_voyages,
    var_backtest,
)
from .bandwidth import CvConfig, Omega0, select_bandwidth
from .errors import IGroupError, SchemaError
from .kernels import Bandwidth, KernelSpec
from .simulation import (
    SimCase1Config,
    SimCase2Config,
    SimCase3Config,
    run_case1,
    run_case2,
    run_case3,
)
from .weights import Scheme, bootstrap_pairs, build_weights

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2


class _Parser(argparse.ArgumentParser):
    """argparse variant with the package's exit-code convention."""

    def error(self, message):
        self.print_usage(sys.stderr)
        _emit_error("UsageError", EXIT_USAGE, message)
        raise SystemExit(EXIT_USAGE)


def _emit_error(kind: str, code: int, message: str):
    msg = str(message).replace('"', "'").replace("\n", " ")
    print(f'igroup-error kind={kind} exit={code} msg="{msg}"', file=sys.stderr)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.9g" % float(value)
    return str(value)


def write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _write_manifest(outdir: Path, subcommand: str, config: dict, seed, outputs, t0: float):
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "version": __version__,
        "duration_seconds": round(time.time() - t0, 3),
        "outputs": sorted(p.name for p in outputs),
    }
    path = outdir / "manifest.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _workers(args) -> int:
    threads = getattr(args, "threads", 1)
    if threads == 0:
        return os.cpu_count() or 1
    return max(threads, 1)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def parse_config_file(path) -> dict:
    """Plain key = value lines; '#' starts a comment."""
    cfg = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        cfg[key.strip().lower()] = value.strip()
    return cfg


def _coerce(cfg: dict, key: str, cast, default):
    if key not in cfg:
        return default
    raw = cfg[key]
    try:
        if cast is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        if cast is tuple:
            return tuple(float(v) for v in raw.split(",") if v.strip() != "")
        return cast(raw)
    except ValueError as exc:
        raise SchemaError(f"config key {key!r}: cannot parse {raw!r}") from exc


def _floats_arg(text):
    return tuple(float(v) for v in str(text).split(",") if v.strip() != "")


# ----------------------------------------------------------------- simulate


def _cmd_simulate(args) -> int:
    outdir = _outdir(args)
    t0 = time.time()
    cfg_file = parse_config_file(args.config) if args.config else {}
    seed = args.seed if args.seed is not None else _coerce(cfg_file, "seed", int, 0)
    workers = _workers(args)
    case = args.case
    if case == "case1":
        cfg = SimCase1Config(
            k=args.k or _coerce(cfg_file, "k", int, 1000),
            sigma_grid=_coerce(cfg_file, "sigma_grid", tuple, (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)),
            tau=_coerce(cfg_file, "tau", float, 1.0),
            replications=args.replications or _coerce(cfg_file, "replications", int, 1000),
            bandwidth_grid=_coerce(cfg_file, "bandwidth_grid", tuple, None),
            include_curves=_coerce(cfg_file, "include_curves", bool, True),
            seed=seed,
        )
        report = run_case1(cfg, workers=workers)
        report_header = ["case", "sigma", "method", "bias", "variance", "mse", "mc_se"]
        report_rows = [
            [r["case"], r["sigma"], r["method"], r["bias"], r["variance"], r["mse"], r["mc_se"]]
            for r in report.rows
        ]
        curves_header = ["case", "sigma", "bandwidth", "scope", "bias", "variance", "mse"]
        curves_rows = [
            [c["case"], c["sigma"], c["bandwidth"], c["scope"], c["bias"], c["variance"], c["mse"]]
            for c in report.curves
        ]
    elif case == "case2":
        cfg = SimCase2Config(
            k=args.k or _coerce(cfg_file, "k", int, 200),
            series_length=_coerce(cfg_file, "series_length", int, 10),
            sigma=_coerce(cfg_file, "sigma", float, 3.0),
            replications=args.replications or _coerce(cfg_file, "replications", int, 100),
            bootstrap_count=_coerce(cfg_file, "bootstrap_count", int, 1),
            grid_points=_coerce(cfg_file, "grid_points", int, 2001),
            seed=seed,
        )
        report = run_case2(cfg, workers=workers)
        report_header = ["case", "method", "bias", "variance", "mse", "mc_se"]
        report_rows = [
            [r["case"], r["method"], r["bias"], r["variance"], r["mse"], r["mc_se"]]
            for r in report.rows
        ]
        curves_header = ["case", "replication", "method", "mse"]
        curves_rows = [
            [c["case"], c["replication"], c["method"], c["mse"]] for c in report.curves
        ]
    else:
        row = args.row if args.row is not None else _coerce(cfg_file, "row", int, 0)
        common = dict(
            k=args.k or _coerce(cfg_file, "k", int, 1024),
            replications=args.replications or _coerce(cfg_file, "replications", int, 200),
            bandwidth_points=_coerce(cfg_file, "bandwidth_points", int, 20),
            bootstrap_count=_coerce(cfg_file, "bootstrap_count", int, 1),
            risk_diagnostics=_coerce(cfg_file, "risk_diagnostics", bool, True),
            seed=seed,
        )
        if row:
            cfg = SimCase3Config.from_row(row, **common)
        else:
            cfg = SimCase3Config(
                n=_coerce(cfg_file, "n", int, 5),
                sigma_x=_coerce(cfg_file, "sigma_x", float, 1.0),
                sigma_z=_coerce(cfg_file, "sigma_z", float, 0.10),
                **common,
            )
        report = run_case3(cfg, workers=workers)
        report_header = [
            "case", "row", "n", "tau2", "sigma_z", "method",
            "bias", "variance", "mse", "mc_se", "r_np", "r_target",
        ]
        report_rows = [
            [
                r["case"], r["row"], r["n"], r["tau2"], r["sigma_z"], r["method"],
                r["bias"], r["variance"], r["mse"], r["mc_se"],
                r.get("r_np", ""), r.get("r_target", ""),
            ]
            for r in report.rows
        ]
        curves_header = ["case", "row", "replication", "method", "mse"]
        curves_rows = [
            [c["case"], c["row"], c["replication"], c["method"], c["mse"]]
            for c in report.curves
        ]
    outputs = [
        write_csv(outdir / "report.csv", report_header, report_rows),
        write_csv(outdir / "curves.csv", curves_header, curves_rows),
    ]
    meta = {"case": case, "config": report.meta, "seed": seed, "version": __version__}
    meta_path = outdir / "meta.json"
    with open(meta_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append(meta_path)
    _write_manifest(outdir, f"simulate {case}", report.meta, seed, outputs, t0)
    return EXIT_OK


# ----------------------------------------------------------------------- var


def _cmd_var(args) -> int:
    outdir = _outdir(args)
    t0 = time.time()
    if args.returns and args.factors:
        panel = ingest_returns_csv(args.returns, args.factors)
    elif args.synthetic:
        panel = synthetic_return_panel(
            args.seed or 0,
            t_days=args.panel_days,
            n_stocks=args.panel_stocks,
            style=args.synthetic,
        )
    else:
        raise SchemaError("var needs --returns/--factors or --synthetic")
    cfg = VarConfig(alpha=args.alpha, window=args.window)
    if args.bandwidth_grid:
        cfg.bandwidth_grid = _floats_arg(args.bandwidth_grid)
    result = var_backtest(panel, cfg, args.method)
    rmse_rows = []
    if result.rmse_curve is not None:
        for b, r in zip(result.bandwidth_grid, result.rmse_curve):
            rmse_rows.append([result.method, b, r, b == result.best_bandwidth])
    else:
        rmse_rows.append([result.method, "", result.rmse, True])
    outputs = [
        write_csv(outdir / "rmse.csv", ["method", "bandwidth", "rmse", "best"], rmse_rows),
        write_csv(
            outdir / "exceedances.csv",
            ["ticker", "frequency"],
            [[tk, f] for tk, f in zip(panel.tickers, result.exceed_freq)],
        ),
        write_csv(
            outdir / "var_surface.csv",
            ["date", "ticker", "var"],
            [
                [d, tk, result.var_surface[i, j]]
                for i, d in enumerate(result.eval_dates)
                for j, tk in enumerate(panel.tickers)
            ],
        ),
    ]
    config = {
        "method": args.method,
        "alpha": cfg.alpha,
        "window": cfg.window,
        "bandwidth_grid": list(cfg.bandwidth_grid),
        "synthetic": args.synthetic,
        "returns": args.returns,
        "factors": args.factors,
        "best_bandwidth": result.best_bandwidth,
        "rmse": result.rmse,
        "dropped_rows": panel.dropped_rows,
    }
    _write_manifest(outdir, "var", config, args.seed or 0, outputs, t0)
    return EXIT_OK


# ------------------------------------------------------------------- anomaly


def _cmd_anomaly(args) -> int:
    outdir = _outdir(args)
    t0 = time.time()
    if args.voyages:
        voyages = ingest_voyages_csv(args.voyages, durations_path=args.durations)
    elif args.synthetic:
        voyages, _ = synthetic_voyages(
            args.seed or 0, n_voyages=args.n_voyages, n_outliers=args.n_outliers
        )
    else:
        raise SchemaError("anomaly needs --voyages or --synthetic")
    report = anomaly_scores(
        voyages,
        k_neighbors=args.k,
        threshold=args.threshold,
        max_points=args.max_points,
        workers=_workers(args),
        kernel_weighted=args.kernel_weighted,
        bandwidth=args.kernel_bandwidth,
    )
    rows = [
        [r.voyage_id, r.mu, r.sigma, r.risk, r.flag, ";".join(r.group)]
        for r in report.records
    ]
    outputs = [
        write_csv(outdir / "scores.csv", ["voyage_id", "mu", "sigma", "risk", "flag", "group"], rows)
    ]
    config = {
        "k_neighbors": args.k,
        "threshold": args.threshold,
        "max_points": args.max_points,
        "kernel_weighted": args.kernel_weighted,
        "voyages": args.voyages,
        "synthetic": bool(args.synthetic),
        "n_flagged": sum(1 for r in report.records if r.flag),
        "dropped_rows": voyages.dropped_rows,
    }
    _write_manifest(outdir, "anomaly", config, args.seed or 0, outputs, t0)
    return EXIT_OK


# ------------------------------------------------------------------ bandwidth


def _cmd_bandwidth(args) -> int:
    outdir = _outdir(args)
    t0 = time.time()
    pop, dropped = read_population_csv(args.pop)
    if args.bandwidth_grid:
        grid = np.asarray(_floats_arg(args.bandwidth_grid))
    else:
        from .bandwidth import default_grid

        grid = default_grid(pop.z_matrix())
    omega0 = None
    if args.cv_scope == "local":
        if not args.center:
            raise SchemaError("local CV scope needs --center")
        omega0 = Omega0(center_id=args.center, epsilon=args.epsilon)
    cfg = CvConfig(grid=grid, omega0=omega0, kernel=KernelSpec(args.kernel))
    report = select_bandwidth(pop, cfg)
    rows = [
        [b, e, b == report.selected]
        for b, e in zip(report.grid, report.errors)
    ]
    outputs = [write_csv(outdir / "cv.csv", ["bandwidth", "cv_error", "selected"], rows)]
    config = {
        "pop": args.pop,
        "cv_scope": args.cv_scope,
        "center": args.center,
        "epsilon": args.epsilon,
        "kernel": args.kernel,
        "grid": [float(b) for b in grid],
        "selected": report.selected,
        "omega0_size": report.omega0_size,
        "dropped_rows": dropped,
    }
    _write_manifest(outdir, "bandwidth", config, args.seed or 0, outputs, t0)
    return EXIT_OK


# ---------------------------------------------------------------- weights-dump


def _cmd_weights_dump(args) -> int:
    outdir = _outdir(args)
    t0 = time.time()
    pop, dropped = read_population_csv(args.pop)
    scheme = Scheme(args.scheme)
    seed = args.seed or 0
    b_z = Bandwidth(args.b_z) if args.b_z else None
    b_theta = (None, None, None)
    if args.b_theta:
        vals = _floats_arg(args.b_theta)
        if len(vals) != 3:
            raise SchemaError("--b-theta expects three comma-separated values")
        b_theta = tuple(Bandwidth(v) for v in vals)
    kernel = KernelSpec(args.kernel)
    pairs = None
    if scheme in (Scheme.THETA_ONLY, Scheme.COMBINED):
        from ._streams import stream

        pairs = bootstrap_pairs(pop, stream(seed, 9, 0))
    ti = pop.index_of(args.target)
    ones = np.ones(len(pop))
    if scheme is Scheme.Z_ONLY:
        w1 = build_weights(pop, args.target, Scheme.Z_ONLY, kernel_z=kernel, b_z=b_z).weights
        w2 = ones
    elif scheme is Scheme.THETA_ONLY:
        w1 = ones
        w2 = build_weights(
            pop, args.target, Scheme.THETA_ONLY, pairs=pairs, kernel_theta=kernel, b_theta=b_theta
        ).weights
    else:
        w1 = build_weights(pop, args.target, Scheme.Z_ONLY, kernel_z=kernel, b_z=b_z).weights
        w2 = build_weights(
            pop, args.target, Scheme.THETA_ONLY, pairs=pairs, kernel_theta=kernel, b_theta=b_theta
        ).weights
    product = w1 * w2
    order = sorted(range(len(pop)), key=lambda i: (-product[i], pop.ids[i]))
    rows = [[pop.ids[i], w1[i], w2[i], product[i]] for i in order]
    outputs = [write_csv(outdir / "weights.csv", ["id", "w1", "w2", "product"], rows)]
    config = {
        "pop": args.pop,
        "target": args.target,
        "scheme": scheme.value,
        "kernel": args.kernel,
        "b_z": args.b_z,
        "b_theta": args.b_theta,
        "dropped_rows": dropped,
        "target_index": ti,
    }
    _write_manifest(outdir, "weights-dump", config, seed, outputs, t0)
    return EXIT_OK


# -------------------------------------------------------------------- parser


def build_parser() -> _Parser:
    parser = _Parser(prog="igroup", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"igroup {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", parser_class=_Parser)

    def common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="base seed")
        p.add_argument("--threads", type=int, default=1, help="worker count (0 = auto, does not affect results)")

    p = sub.add_parser("simulate", help="run a simulation study")
    p.add_argument("case", choices=["case1", "case2", "case3"])
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--row", type=int, default=None, help="case3 standard configuration row (1-12)")
    p.add_argument("--replications", type=int, default=None)
    p.add_argument("--k", type=int, default=None, help="population size")
    common(p)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("var", help="VaR backtest")
    p.add_argument("--returns", help="returns CSV: date,ticker,return")
    p.add_argument("--factors", help="factors CSV: date,mkt_rf,smb,hml,rf")
    p.add_argument("--synthetic", choices=["heterogeneous", "homogeneous", "iid_normal"])
    p.add_argument("--panel-days", type=int, default=350)
    p.add_argument("--panel-stocks", type=int, default=100)
    p.add_argument("--method", choices=["individual", "market", "igroup"], default="igroup")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--window", type=int, default=100)
    p.add_argument("--bandwidth-grid", help="comma-separated bandwidths")
    common(p)
    p.set_defaults(fn=_cmd_var)

    p = sub.add_parser("anomaly", help="trajectory anomaly scores")
    p.add_argument("--voyages", help="voyages CSV: voyage_id,seq,lat,lon[,sailing_time_hours]")
    p.add_argument("--durations", help="sidecar durations CSV: voyage_id,hours")
    p.add_argument("--synthetic", action="store_true", help="use the synthetic port generator")
    p.add_argument("--n-voyages", type=int, default=500)
    p.add_argument("--n-outliers", type=int, default=10)
    p.add_argument("--k", type=int, default=40, help="neighborhood size")
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--max-points", type=int, default=500, help="trajectory point cap before DTW")
    p.add_argument(
        "--kernel-weighted", action="store_true",
        help="weight neighborhood members by a kernel on DTW distance (equal weights by default)",
    )
    p.add_argument("--kernel-bandwidth", type=float, default=None)
    common(p)
    p.set_defaults(fn=_cmd_anomaly)

    p = sub.add_parser("bandwidth", help="leave-one-out CV bandwidth selection")
    p.add_argument("--pop", required=True, help="population CSV: id,theta_hat,z0..")
    p.add_argument("--bandwidth-grid", help="comma-separated candidate bandwidths")
    p.add_argument("--cv-scope", choices=["global", "local"], default="global")
    p.add_argument("--center", help="center id for local scope")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--kernel", default="gaussian")
    common(p)
    p.set_defaults(fn=_cmd_bandwidth)

    p = sub.add_parser("weights-dump", help="dump one target's weight vector")
    p.add_argument("--pop", required=True, help="population CSV: id,theta_hat,z0..,x0..")
    p.add_argument("--target", required=True)
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default="z")
    p.add_argument("--b-z", type=float, default=None)
    p.add_argument("--b-theta", help="three comma-separated bandwidths")
    p.add_argument("--kernel", default="gaussian")
    common(p)
    p.set_defaults(fn=_cmd_weights_dump)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(args, "subcommand", None):
        parser.print_usage(sys.stderr)
        _emit_error("UsageError", EXIT_USAGE, "a subcommand is required")
        return EXIT_USAGE
    try:
        return args.fn(args)
    except SchemaError as exc:
        _emit_error(type(exc).__name__, EXIT_USAGE, str(exc))
        return EXIT_USAGE
    except IGroupError as exc:
        _emit_error(type(exc).__name__, EXIT_NUMERIC, str(exc))
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
