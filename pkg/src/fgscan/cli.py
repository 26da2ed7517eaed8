"""Command-line interface: ``fgscan {simulate,fit,penfit,cif,bench}``.

Exit codes: 0 success, 1 input/output failure, 2 usage error, 3 numerical
or model failure.  Every option can also be supplied through an
environment variable ``FGSCAN_<OPTION>`` (dashes become underscores), e.g.
``FGSCAN_SEED=7``; explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .bootstrap import BootstrapControl, bootstrap_covariance, wald_intervals
from .cif import breslow_baseline, cif_band, cif_pointwise_interval, predict_cif
from .dataset import load_csv, write_csv
from .errors import CsvFormatError, FgscanError
from .fit import fit_unpenalized, summarize
from .penalized import PENALTIES, fit_path, log_grid
from .scan import NAIVE_ENGINE_CAP
from .sim import SimConfig, scaling_config, simulate_with_report
from .svg import cif_svg

log = logging.getLogger("fgscan")

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_MODEL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def algorithm_notes_hash() -> str:
    data = resources.files("fgscan").joinpath("ALGORITHM_NOTES.md").read_bytes()
    return hashlib.sha256(data).hexdigest()[:12]


def version_string() -> str:
    return f"fgscan {__version__} (notes {algorithm_notes_hash()})"


# ---------------------------------------------------------------- parsing


class _EnvParser(argparse.ArgumentParser):
    """ArgumentParser whose options default to FGSCAN_* environment values."""

    def add_argument(self, *args, **kw):
        action = super().add_argument(*args, **kw)
        if action.option_strings and action.dest not in ("help", "version"):
            env = os.environ.get("FGSCAN_" + action.dest.upper())
            if env is not None:
                if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                    action.default = env.strip().lower() in ("1", "true", "yes", "on")
                else:
                    action.default = action.type(env) if action.type else env
                action.required = False
        return action


def _floats(text: str) -> list[float]:
    if text.startswith("@"):
        text = Path(text[1:]).read_text(encoding="utf-8")
    parts = [p for p in text.replace("\n", ",").replace(" ", ",").split(",") if p.strip()]
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from exc
    if not vals or not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"need finite numbers: {text!r}")
    return vals


def _ints(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from exc


def _grid(text: str):
    try:
        count, lo, hi = text.split(":")
        return int(count), float(lo), float(hi)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("grid must look like COUNT:MIN:MAX") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _EnvParser(prog="fgscan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=version_string())
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_EnvParser)

    p = sub.add_parser("simulate", help="simulate two-cause competing-risks data")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta1", type=_floats, required=True,
                   help="comma-separated coefficients or @file")
    p.add_argument("--beta2", type=_floats, help="defaults to -beta1")
    p.add_argument("--pi", type=float, default=0.5)
    p.add_argument("--umin", type=float, default=0.0)
    p.add_argument("--umax", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=0.0, help="AR(1) covariate correlation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--report", type=Path, help="JSON report (default: OUT with .json)")

    p = sub.add_parser("fit", help="unpenalized Fine-Gray regression")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--variance", action="store_true", help="bootstrap covariance")
    p.add_argument("--B", type=int, default=100)
    p.add_argument("--seed", type=int, default=2019)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--engine", choices=("scan", "naive"), default="scan")
    p.add_argument("--force", action="store_true", help="allow the naive engine above its cap")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path, help="JSON report (default: stdout)")

    p = sub.add_parser("penfit", help="penalized path with BIC selection")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--penalty", choices=PENALTIES, default="lasso")
    p.add_argument("--lambda-grid", type=_grid, default=(25, 0.001, 0.1),
                   help="COUNT:MIN:MAX on a log scale (default 25:0.001:0.1)")
    p.add_argument("--lambdas", type=_floats, help="explicit descending grid; overrides --lambda-grid")
    p.add_argument("--gamma", type=float)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--out", type=Path, required=True, help="path CSV")
    p.add_argument("--report", type=Path, help="JSON report (default: OUT with .json)")

    p = sub.add_parser("cif", help="predicted cumulative incidence with intervals")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--z0", type=_floats, required=True)
    p.add_argument("--B", type=int, default=100, help="0 disables intervals")
    p.add_argument("--seed", type=int, default=2019)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--tl", type=float)
    p.add_argument("--tu", type=float)
    p.add_argument("--band", action="store_true")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path, required=True, help="curve CSV")
    p.add_argument("--svg", type=Path)
    p.add_argument("--report", type=Path)

    p = sub.add_parser("bench", help="fit timings versus sample size")
    p.add_argument("--sizes", type=_ints, default=[1000, 2000, 4000, 8000])
    p.add_argument("--p", type=int, default=100)
    p.add_argument("--engine", choices=("scan", "naive", "both"), default="scan")
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--design", choices=("sparse", "dense"), default="sparse")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--force", action="store_true", help="allow the naive engine above its cap")
    p.add_argument("--out", type=Path, required=True, help="timing CSV")
    p.add_argument("--report", type=Path)
    return parser


# ---------------------------------------------------------------- helpers


def _f(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def _input_digest(ds) -> dict:
    return {"n": ds.n, "p": ds.p,
            "status_counts": {str(k): v for k, v in ds.status_counts().items()}}


def _echo(args, argv) -> dict:
    opts = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
            if k not in ("func",)}
    return {"argv": list(argv), "options": opts}


def _report(args, argv, ds, results, timings, seeds=None) -> dict:
    return {
        "tool": "fgscan",
        "version": __version__,
        "algorithm_notes": algorithm_notes_hash(),
        "command": _echo(args, argv),
        "input": _input_digest(ds) if ds is not None else None,
        "results": results,
        "seeds": seeds or {},
        "timings": timings,
    }


def _dump_json(obj, path: Path | None):
    text = json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8")


def _default_report(out: Path, report: Path | None) -> Path:
    return report if report is not None else out.with_suffix(".json")


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, list):
        return [_jsonable(v) for v in x]
    if isinstance(x, float):
        return x if math.isfinite(x) else None
    return x


# ---------------------------------------------------------------- commands


def cmd_simulate(args, argv) -> int:
    beta1 = args.beta1
    beta2 = args.beta2 if args.beta2 is not None else [-b for b in beta1]
    if args.n < 1:
        raise UsageError("--n must be positive")
    try:
        cfg = SimConfig(n=args.n, beta1=beta1, beta2=beta2, u_min=args.umin, u_max=args.umax,
                        pi=args.pi, seed=args.seed, rho=args.rho)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    t0 = time.perf_counter()
    ds, gen = simulate_with_report(cfg)
    t1 = time.perf_counter()
    write_csv(ds, args.out)
    report = _report(args, argv, ds, gen, {"simulate": t1 - t0}, {"seed": args.seed})
    _dump_json(report, _default_report(args.out, args.report))
    return EXIT_OK


def cmd_fit(args, argv) -> int:
    if args.variance and args.B < 2:
        raise UsageError("--B must be at least 2")
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    ds = load_csv(args.data)
    if args.engine == "naive" and ds.n > NAIVE_ENGINE_CAP and not args.force:
        raise UsageError(f"naive engine refused above n={NAIVE_ENGINE_CAP}; pass --force")
    timings = {}
    t0 = time.perf_counter()
    fit = fit_unpenalized(ds, tol=args.tol, max_iter=args.max_iter, engine=args.engine,
                          force=args.force)
    timings["fit"] = time.perf_counter() - t0
    results = {
        "names": list(ds.names),
        "coefficients": fit.coefficients.tolist(),
        "exp_coefficients": np.exp(fit.coefficients).tolist(),
        "loglik": fit.loglik,
        "null_loglik": fit.null_loglik,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "engine": fit.engine,
    }
    seeds = {}
    if args.variance:
        ctrl = BootstrapControl(B=args.B, seed=args.seed, jobs=args.jobs)
        t0 = time.perf_counter()
        est = bootstrap_covariance(ds, ctrl, {"tol": args.tol, "max_iter": args.max_iter,
                                              "engine": args.engine, "force": args.force},
                                   init=fit.coefficients)
        timings["bootstrap"] = time.perf_counter() - t0
        fit = fit.with_covariance(est.matrix)
        rows = summarize(fit, alpha=args.alpha)
        lo, hi = wald_intervals(fit.coefficients, est.matrix, args.alpha)
        results.update(
            covariance=est.matrix.tolist(),
            se=[r.se for r in rows],
            z=[_jsonable(r.z) for r in rows],
            p_values=[r.p_value for r in rows],
            alpha=args.alpha,
            ci_lower=lo.tolist(),
            ci_upper=hi.tolist(),
            bootstrap={"B": args.B, "skipped": est.skipped},
        )
        seeds["bootstrap"] = args.seed
    _dump_json(_report(args, argv, ds, results, timings, seeds), args.out)
    return EXIT_OK


def cmd_penfit(args, argv) -> int:
    if args.lambdas is not None:
        lambdas = np.array(args.lambdas)
    else:
        try:
            lambdas = log_grid(*args.lambda_grid)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    ds = load_csv(args.data)
    t0 = time.perf_counter()
    try:
        path = fit_path(ds, args.penalty, lambdas, gamma=args.gamma, tol=args.tol,
                        max_iter=args.max_iter, standardize=args.standardize)
    except ValueError as exc:
        if isinstance(exc, FgscanError):
            raise
        raise UsageError(str(exc)) from exc
    elapsed = time.perf_counter() - t0
    with args.out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", *[f"coef_{j + 1}" for j in range(ds.p)], "df", "bic"])
        for t, lam in enumerate(path.lambdas):
            w.writerow([_f(lam), *(_f(v) for v in path.coef_matrix[:, t]), int(path.df[t]),
                        _f(path.bic[t])])
    k = path.selected_index
    results = {
        "penalty": path.penalty,
        "gamma": path.gamma,
        "standardized": path.standardized,
        "lambdas": path.lambdas.tolist(),
        "df": path.df.tolist(),
        "bic": path.bic.tolist(),
        "loglik": path.loglik.tolist(),
        "converged": path.converged.tolist(),
        "selected": {
            "index": k,
            "lambda": float(path.lambdas[k]),
            "coefficients": path.coef_matrix[:, k].tolist(),
            "names": list(ds.names),
            "df": int(path.df[k]),
            "bic": float(path.bic[k]),
            "loglik": float(path.loglik[k]),
        },
    }
    _dump_json(_report(args, argv, ds, results, {"path": elapsed}),
               _default_report(args.out, args.report))
    return EXIT_OK


def cmd_cif(args, argv) -> int:
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    want_intervals = args.B > 0
    if want_intervals:
        if args.B < 2:
            raise UsageError("--B must be 0 or at least 2")
        if args.tl is None or args.tu is None:
            raise UsageError("--tl and --tu are required when --B > 0")
    if args.tl is not None and args.tu is not None and not 0 < args.tl < args.tu:
        raise UsageError(f"need 0 < tl < tu, got tl={args.tl}, tu={args.tu}")
    ds = load_csv(args.data)
    if len(args.z0) != ds.p:
        raise UsageError(f"--z0 has {len(args.z0)} entries, data have p={ds.p}")
    timings = {}
    t0 = time.perf_counter()
    fit = fit_unpenalized(ds, tol=args.tol)
    timings["fit"] = time.perf_counter() - t0
    z0 = np.array(args.z0)
    seeds = {}
    if want_intervals:
        ctrl = BootstrapControl(B=args.B, seed=args.seed, jobs=args.jobs)
        op = cif_band if args.band else cif_pointwise_interval
        t0 = time.perf_counter()
        try:
            est = op(ds, z0, ctrl, alpha=args.alpha, tL=args.tl, tU=args.tu, fit=fit,
                     fit_options={"tol": args.tol})
        except ValueError as exc:
            if isinstance(exc, FgscanError):
                raise
            raise UsageError(str(exc)) from exc
        timings["bootstrap"] = time.perf_counter() - t0
        seeds["bootstrap"] = args.seed
    else:
        est = predict_cif(breslow_baseline(ds, None, fit.coefficients), fit.coefficients, z0)

    grid_pos = {}
    if est.grid is not None:
        grid_pos = {float(t): i for i, t in enumerate(est.grid)}
    with args.out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "estimate", "lower", "upper", "band_lower", "band_upper"])
        w.writerow([_f(0.0), _f(0.0), "", "", "", ""])
        for t, v in zip(est.times, est.values):
            i = grid_pos.get(float(t))
            row = [_f(t), _f(v)]
            for arr in (est.lower, est.upper, est.band_lower, est.band_upper):
                row.append(_f(arr[i]) if (arr is not None and i is not None) else "")
            w.writerow(row)
    if args.svg is not None:
        args.svg.write_text(cif_svg(est), encoding="utf-8")
    results = {
        "coefficients": fit.coefficients.tolist(),
        "z0": z0.tolist(),
        "linear_predictor": float(z0 @ fit.coefficients),
        "n_times": int(est.times.size),
        "alpha": args.alpha if want_intervals else None,
        "critical_value": est.critical_value,
        "grid_size": int(est.grid.size) if est.grid is not None else 0,
        "tl": args.tl,
        "tu": args.tu,
    }
    if args.report is not None:
        _dump_json(_report(args, argv, ds, results, timings, seeds), args.report)
    return EXIT_OK


def _slope(ns, secs):
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(secs, dtype=float))
    if x.size < 2:
        return None
    return float(np.polyfit(x, y, 1)[0])


def cmd_bench(args, argv) -> int:
    engines = ("scan", "naive") if args.engine == "both" else (args.engine,)
    if not args.sizes or min(args.sizes) < 2:
        raise UsageError("--sizes must be integers >= 2")
    if args.replicates < 1 or args.p < 1:
        raise UsageError("--replicates and --p must be positive")
    if "naive" in engines and max(args.sizes) > NAIVE_ENGINE_CAP and not args.force:
        raise UsageError(f"naive engine refused above n={NAIVE_ENGINE_CAP}; pass --force")
    rows = []
    diffs = {}
    # untimed warm-up so compilation and cache loading stay out of the timings
    warm = _bench_data(64, min(args.p, 5), args.seed, args.design)
    for eng in engines:
        fit_unpenalized(warm, tol=args.tol, engine=eng)
    for n in args.sizes:
        for r in range(args.replicates):
            ds = _bench_data(n, args.p, args.seed + r, args.design)
            coefs = {}
            for eng in engines:
                t0 = time.perf_counter()
                f = fit_unpenalized(ds, tol=args.tol, engine=eng, force=args.force)
                secs = time.perf_counter() - t0
                coefs[eng] = f.coefficients
                rows.append({"engine": eng, "n": n, "p": args.p, "replicate": r,
                             "seconds": secs, "iterations": f.iterations,
                             "converged": f.converged})
            if len(coefs) == 2:
                d = float(np.max(np.abs(coefs["scan"] - coefs["naive"])))
                diffs[n] = max(diffs.get(n, 0.0), d)
    with args.out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    results = {"engines": list(engines), "slopes": {}, "median_seconds": {}}
    for eng in engines:
        med = [float(np.median([r["seconds"] for r in rows if r["engine"] == eng and r["n"] == n]))
               for n in args.sizes]
        results["median_seconds"][eng] = dict(zip(map(str, args.sizes), med))
        results["slopes"][eng] = _slope(args.sizes, med)
    if diffs:
        results["max_abs_coef_diff"] = {str(k): v for k, v in diffs.items()}
    report = _report(args, argv, None, results, {}, {"seed": args.seed})
    _dump_json(report, _default_report(args.out, args.report))
    return EXIT_OK


def _bench_data(n, p, seed, design):
    from .sim import simulate

    return simulate(scaling_config(n, p, seed=seed, sparse=design == "sparse"))


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "penfit": cmd_penfit, "cif": cmd_cif,
            "bench": cmd_bench}


def _fail(code, kind, message) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) is not None and getattr(args, "jobs", 1) < 1:
        return _fail(EXIT_USAGE, "usage", "--jobs must be >= 1")
    try:
        return COMMANDS[args.command](args, argv)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    except (CsvFormatError, OSError) as exc:
        return _fail(EXIT_IO, type(exc).__name__, str(exc))
    except FgscanError as exc:
        return _fail(EXIT_MODEL, type(exc).__name__, str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
