"""
Command-line front end.

Every command reads an optional JSON config (``--config``), takes global
``--seed``, ``--out`` and ``--threads`` flags, and writes flat files.

Exit codes
----------
0  success
2  configuration or schema error (also argparse usage errors)
3  domain, numerical or estimation error
4  I/O error
5  model or regime without an implemented closed form / joint law
"""
from __future__ import annotations

import argparse
import os
import sys
import time

from . import __version__
from .config import ConfigError, load_config, model_from_config, spec_digest
from .estimation import EstimationError, GridSpec, McConfig, estimate_alpha, mc_study
from .fields import COMMON_Z, DEFAULT_WEIGHTS, IndependentFrechet, Schlather, SpecError, lagged_pairs, simulate_pmax
from .io import (
    SVG_POINT_CAP,
    read_sample_csv,
    scatter_svg,
    write_json,
    write_pairs_csv,
    write_sample_csv,
)
from .stats_core import DomainError, NumericalError, RngStream
from .tail_coeffs import (
    ETA_GRID,
    LAMBDA_GRID,
    TailContext,
    UnsupportedModelError,
    eta_ex1,
    eta_oracle,
    eta_prop41,
    eta_z_common,
    joint_cdf_builder,
    lambda_ex1,
    lambda_ex2,
    lambda_ex2_composed,
    lambda_oracle,
    lambda_prop31,
    lambda_z_common,
    x_layer_coefficients,
)

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_CONFIG", "EXIT_DOMAIN", "EXIT_IO", "EXIT_UNSUPPORTED"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_IO = 4
EXIT_UNSUPPORTED = 5

PROG = "pmax"
MAX_SEED = 2**64 - 1


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _global_flags(parser, suppress: bool):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--config", metavar="PATH", default=default(None), help="JSON run configuration")
    parser.add_argument("--seed", metavar="U64", type=_seed, default=default(None),
                        help="master seed; overrides the config value")
    parser.add_argument("--out", metavar="PATH", default=default(None), help="output file or prefix")
    parser.add_argument("--threads", metavar="N", type=_positive_int, default=default(None),
                        help="worker processes for mc-table (default: available CPUs)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="pMAX random fields: simulation, "
                                     "tail coefficients and power-parameter estimation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("simulate", parents=[common], help="simulate the field, write n,loc,value CSV")
    p.add_argument("--n-time", type=_positive_int, help="number of time steps (default: run.n_time)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("coeffs", parents=[common], help="closed-form and oracle tail coefficients")
    p.add_argument("--r", type=int, help="time lag (default: run.r)")
    p.add_argument("--x", help="first location id (default: run.x)")
    p.add_argument("--xp", help="second location id (default: run.xp, else x)")
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("estimate", parents=[common], help="estimate alpha at one location")
    p.add_argument("--input", help="n,loc,value CSV (default: run.input)")
    p.add_argument("--location", help="location id (default: run.location, else the only one)")
    p.add_argument("--k", type=float, help="upper grid percentile (default: run.k, else 95)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("mc-table", parents=[common], help="Monte Carlo table of the alpha estimator")
    p.set_defaults(func=cmd_mc_table)

    p = sub.add_parser("figures", parents=[common], help="pair CSV and SVG scatter per alpha setting")
    p.add_argument("--r", type=int, help="time lag (default: run.r, else 0)")
    p.add_argument("--x", help="first location id")
    p.add_argument("--xp", help="second location id")
    p.add_argument("--n-time", type=_positive_int, help="number of time steps (default: run.n_time)")
    p.add_argument("--transform", choices=("frechet", "raw"),
                   help="frechet maps both coordinates into (0,1) (default)")
    p.set_defaults(func=cmd_figures)
    return parser


# --- helpers ---------------------------------------------------------------

def _load(args) -> dict:
    return load_config(args.config) if args.config else {}


def _run(doc: dict) -> dict:
    return doc.get("run", {})


def _resolve_seed(args, doc) -> int:
    if args.seed is not None:
        return args.seed
    return int(doc.get("seed", 0))


def _require(value, what):
    if value is None:
        raise ConfigError(f"missing {what}")
    return value


def _require_out(args, what):
    if not args.out:
        raise ConfigError(f"--out is required ({what})")
    return args.out


def _pick(flag, run, key, default=None):
    if flag is not None:
        return flag
    return run.get(key, default)


def _example_of(spec) -> int | None:
    """1 or 2 when the model is one of the worked structures, else None."""
    default_weights = len(spec.temporal_weights) == 2 and all(
        abs(w - p) <= 1e-12 for w, p in zip(spec.temporal_weights, DEFAULT_WEIGHTS)
    )
    if not default_weights or spec.z_coupling != COMMON_Z:
        return None
    if isinstance(spec.innovation, IndependentFrechet):
        return 1
    if isinstance(spec.innovation, Schlather):
        return 2
    return None


# --- commands --------------------------------------------------------------

def cmd_simulate(args) -> int:
    doc = _load(args)
    spec = model_from_config(doc)
    n_time = _require(_pick(args.n_time, _run(doc), "n_time"), "n_time (--n-time or run.n_time)")
    out = _require_out(args, "CSV path")
    seed = _resolve_seed(args, doc)
    sample = simulate_pmax(spec, n_time, RngStream(seed, 0))
    rows = write_sample_csv(sample, out)
    print(f"seed: {seed}")
    print(f"spec_digest: {spec_digest(doc)}")
    print(f"rows: {rows}")
    return EXIT_OK


def _coeff_report(spec, ctx) -> dict:
    example = _example_of(spec)
    if example is None:
        raise UnsupportedModelError(
            "closed forms exist only for weights (2/3, 1/3) with a common Z; "
            f"got weights {spec.temporal_weights} and z_coupling {spec.z_coupling!r}"
        )
    labels, flags = {}, {}

    # closed form for the worked structure
    if example == 1:
        lam_closed = lambda_ex1(ctx)
        try:
            eta_c = eta_ex1(ctx)
            eta_closed, labels["eta_closed"] = eta_c.value, eta_c.derivation
        except DomainError as exc:
            eta_closed, labels["eta_closed"] = None, f"unavailable: {exc}"
    else:
        corr = spec.innovation.correlation
        lam_closed = lambda_ex2(ctx, corr)
        eta_closed, labels["eta_closed"] = None, "unavailable: no closed-form eta for this structure"
    labels["lambda_closed"] = lam_closed.derivation

    # general propositions composed from the layer coefficients
    lam_x, eta_x = x_layer_coefficients(spec, ctx)
    lam_z = lambda_z_common(ctx.alpha_x, ctx.alpha_xp) if ctx.r == 0 else None
    eta_z = eta_z_common(ctx.alpha_x, ctx.alpha_xp) if ctx.r == 0 else None
    lam_prop = lambda_prop31(ctx, lam_x, lam_z)
    eta_prop = eta_prop41(ctx, eta_x, eta_z)
    labels["lambda_prop31"] = lam_prop.derivation
    labels["eta_prop41"] = eta_prop.derivation
    report = {
        "lambda_closed": lam_closed.value,
        "lambda_prop31": lam_prop.value,
        "eta_closed": eta_closed,
        "eta_prop41": eta_prop.value,
        "layer_inputs": {"lambda_x": lam_x, "eta_x": eta_x, "lambda_z": lam_z, "eta_z": eta_z},
    }
    if example == 2:
        composed = lambda_ex2_composed(ctx, spec.innovation.correlation)
        report["lambda_composed"] = composed.value
        labels["lambda_composed"] = composed.derivation

    # numerical oracles on the exact joint law
    joint = joint_cdf_builder(spec, ctx)
    lam_o = lambda_oracle(joint, LAMBDA_GRID)
    report["lambda_oracle"] = lam_o.value
    flags["lambda_oracle_converged"] = lam_o.converged
    flags["lambda_oracle_last_change"] = lam_o.last_change
    for margins, key in (("raw", "eta_oracle"), ("frechet", "eta_oracle_frechet")):
        try:
            res = eta_oracle(joint, ETA_GRID, margins=margins)
        except NumericalError as exc:
            report[key] = None
            flags[f"{key}_error"] = str(exc)
            continue
        report[key] = res.value
        flags[f"{key}_max_residual"] = res.max_residual
        flags[f"{key}_fit_ok"] = res.max_residual < 1e-2
    report["branch_labels"] = labels
    report["convergence_flags"] = flags
    return report


def cmd_coeffs(args) -> int:
    doc = _load(args)
    spec = model_from_config(doc)
    run = _run(doc)
    r = _require(_pick(args.r, run, "r"), "lag (--r or run.r)")
    x_id = _require(_pick(args.x, run, "x"), "location (--x or run.x)")
    xp_id = _pick(args.xp, run, "xp", x_id)
    if r < 0:
        raise DomainError("lag r must be non-negative")
    x, xp = spec.location(x_id), spec.location(xp_id)
    ctx = TailContext(r, x, xp, spec.alpha[x.id], spec.alpha[xp.id])
    ctx.require_nondegenerate()
    report = {
        "regime": ctx.regime,
        "r": r,
        "x": x.id,
        "xp": xp.id,
        "alpha_x": ctx.alpha_x,
        "alpha_xp": ctx.alpha_xp,
        "h": ctx.h,
    }
    report.update(_coeff_report(spec, ctx))
    text = write_json(report, args.out)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_estimate(args) -> int:
    doc = _load(args)
    run = _run(doc)
    path = _require(_pick(args.input, run, "input"), "input CSV (--input or run.input)")
    k = float(_pick(args.k, run, "k", 95.0))
    sample = read_sample_csv(path)
    loc = _pick(args.location, run, "location")
    if loc is None:
        if len(sample.location_ids) != 1:
            raise ConfigError(f"--location required; file has {list(sample.location_ids)}")
        loc = sample.location_ids[0]
    if loc not in sample.location_ids:
        raise DomainError(f"location {loc!r} not in {path}")
    try:
        est = estimate_alpha(sample.column(loc), GridSpec(k=k))
    except EstimationError as exc:
        print(f"{PROG}: diagnostics: {exc.diagnostics}", file=sys.stderr)
        raise
    report = {"location": loc, "k": k, "n": sample.n_time, **est.to_dict()}
    text = write_json(report, args.out)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_mc_table(args) -> int:
    doc = _load(args)
    run = _run(doc)
    out = _require_out(args, "CSV path")
    example = run.get("example")
    if example is None and "model" in doc:
        example = _example_of(model_from_config(doc))
        if example is None:
            raise UnsupportedModelError("mc-table supports only the two worked structures")
    kwargs = {k: tuple(run[k]) for k in ("alphas", "sample_sizes", "percentiles") if k in run}
    if "replicates" in run:
        kwargs["replicates"] = run["replicates"]
    config = McConfig(example=example or 1, master_seed=_resolve_seed(args, doc), **kwargs)
    threads = args.threads or os.cpu_count() or 1
    start = time.perf_counter()
    report = mc_study(config, workers=threads)
    elapsed = time.perf_counter() - start
    report.write_csv(out)
    failures = sum(row.failures for row in report.rows)
    failed_cells = sum(row.failed for row in report.rows)
    print(f"cells: {len(report.rows)}  replicates per cell: {config.replicates}")
    print(f"replicate failures: {failures}  failed cells: {failed_cells}")
    print(f"note: {report.header_note}")
    print(f"wall-clock: {elapsed:.2f} s")
    return EXIT_OK


def cmd_figures(args) -> int:
    doc = _load(args)
    spec = model_from_config(doc)
    run = _run(doc)
    prefix = _require_out(args, "output prefix")
    r = int(_pick(args.r, run, "r", 0))
    x_id = _pick(args.x, run, "x", spec.location_ids[0])
    xp_id = _pick(args.xp, run, "xp", x_id)
    n_time = _require(_pick(args.n_time, run, "n_time"), "n_time (--n-time or run.n_time)")
    transform = _pick(args.transform, run, "transform", "frechet")
    cap = int(run.get("point_cap", SVG_POINT_CAP))
    seed = _resolve_seed(args, doc)
    spec.location(x_id), spec.location(xp_id)

    settings = run.get("alpha_settings") or [{}]
    for setting in settings:
        alpha = dict(spec.alpha)
        alpha.update(setting)
        sub = model_from_config({**doc, "model": {**doc["model"], "alpha": alpha}})
        sample = simulate_pmax(sub, n_time, RngStream(seed, 0))
        pairs = lagged_pairs(sample, r, x_id, xp_id, transform=(transform == "frechet"))
        if len(pairs) == 0:
            raise DomainError("no pairs to plot")
        ax, axp = alpha[x_id], alpha[xp_id]
        stem = f"{prefix}_r{r}_{x_id}_{xp_id}_a{ax:g}_{axp:g}"
        write_pairs_csv(pairs, stem + ".csv")
        title = f"r={r}, x={x_id}, x'={xp_id}, alpha=({ax:g}, {axp:g})"
        svg = scatter_svg(pairs, title=title, unit_square=(transform == "frechet"), point_cap=cap)
        with open(stem + ".svg", "w") as fh:
            fh.write(svg)
        print(f"wrote {stem}.csv ({len(pairs)} pairs) and {stem}.svg")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SpecError) as exc:
        code, msg = EXIT_CONFIG, str(exc)
    except UnsupportedModelError as exc:
        code, msg = EXIT_UNSUPPORTED, f"unsupported model: {exc}"
    except (DomainError, NumericalError) as exc:
        code, msg = EXIT_DOMAIN, str(exc)
    except OSError as exc:
        code, msg = EXIT_IO, f"I/O error: {exc}"
    print(f"{PROG}: error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
