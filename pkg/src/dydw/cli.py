"""Command-line runner: one subcommand per experiment, CSV data plus a JSON summary."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import bounds, estimators
from .errors import DiagnosticError, ValidationError
from .events import KINDS, EventSpec, RectangleStack, sigma_bound_audit
from .sticking import classify_sticking, decompose, reconstruct, split_holds, stick_quadruple
from .tau import CSV_HEADER as INTERVAL_HEADER
from .tau import exceptional_search_sub, exceptional_search_super
from .web import SiteAddress, WebPair, arrow_stream

EXPERIMENTS = (
    "dump-stream",
    "geometry",
    "estimate",
    "joint",
    "sweep",
    "search-sub",
    "search-super",
    "sticking",
    "coupling",
    "pivotal",
    "bounds",
    "second-moment",
)

EXIT_OK, EXIT_VALIDATION, EXIT_DIAGNOSTIC, EXIT_USAGE = 0, 2, 3, 64


def status(msg: str):
    print(msg, file=sys.stderr, flush=True)


def _floats(text: str) -> list[float]:
    return bounds.parse_grid(text)


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _window(text: str) -> tuple[float, float]:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("window must be 'a,b'")
    return parts[0], parts[1]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", "--seed-root", dest="seed", type=int, default=0)
    common.add_argument("--out", dest="output_dir", default="results")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--config", default=None, help="key=value file; flags win")
    common.add_argument("--tau-max", type=float, default=1.0)

    stack = argparse.ArgumentParser(add_help=False)
    stack.add_argument("--gamma", type=float, default=2.0)
    stack.add_argument("--k-max", type=int, default=None)
    stack.add_argument("--width-alpha", type=float, default=1.0)
    stack.add_argument("--skew", type=float, nargs=2, default=(1.0, 1.0), metavar=("C_L", "C_R"))

    p = argparse.ArgumentParser(prog="dydw", description="Dynamical discrete web experiments.")
    sub = p.add_subparsers(dest="experiment", required=True)

    s = sub.add_parser("dump-stream", parents=[common], help="ring times and values of one arrow")
    s.add_argument("--web", default="main", choices=("main", "secondary"))
    s.add_argument("--x", type=int, default=0)
    s.add_argument("--t", type=int, default=0)

    sub.add_parser("geometry", parents=[common, stack], help="stack table and envelope audit")

    for name in ("estimate", "joint"):
        s = sub.add_parser(name, parents=[common, stack])
        s.add_argument("--event", default="C", choices=KINDS)
        s.add_argument("--k", type=int, default=0)
        s.add_argument("--tau", type=float, default=0.0)
        s.add_argument("--n", dest="n_replicates", type=int, default=10000)
        if name == "joint":
            s.add_argument("--tau-prime", type=float, required=True)

    s = sub.add_parser("sweep", parents=[common, stack], help="decorrelation sweep over tau'")
    s.add_argument("--event", default="C", choices=("B", "C"))
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--grid", type=_floats, default="0.05,0.1,0.2,0.5,1,2,5")
    s.add_argument("--n", dest="n_replicates", type=int, default=10000)
    s.add_argument("--product-n", type=int, default=None)

    s = sub.add_parser("search-sub", parents=[common, stack], help="interval set of C_0..C_n")
    s.add_argument("--level", type=int, default=1)
    s.add_argument("--window", type=_window, default=None)

    s = sub.add_parser("search-super", parents=[common, stack], help="nested A_hat interval search")
    s.add_argument("--k-list", type=_ints, default="1,2,3")
    s.add_argument("--window", type=_window, default=None)

    s = sub.add_parser("sticking", parents=[common, stack], help="sticking labels for one quadruple")
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--tau", type=float, default=0.0)
    s.add_argument("--tau-prime", type=float, default=0.5)
    s.add_argument("--beta", type=float, default=0.5)

    s = sub.add_parser("coupling", parents=[common, stack], help="sticking-run survival functions")
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--tau", type=float, default=0.0)
    s.add_argument("--tau-prime", type=float, default=0.5)
    s.add_argument("--n", dest="n_replicates", type=int, default=10000)
    s.add_argument("--j-max", type=int, default=5)

    s = sub.add_parser("pivotal", parents=[common, stack], help="pivotal switch chain")
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--n", dest="n_replicates", type=int, default=1000)
    s.add_argument("--window", type=_window, default=None)

    s = sub.add_parser("bounds", parents=[common], help="dimension bounds over a K grid")
    s.add_argument("--K-grid", dest="K_grid", type=_floats, default="0.5:5:0.5")
    s.add_argument("--K-R", dest="K_R", type=float, default=None, help="fixed right constant (asymmetric rows)")

    s = sub.add_parser("second-moment", parents=[common, stack], help="second-moment ratio for E_n")
    s.add_argument("--level", type=int, default=1)
    s.add_argument("--resolution", type=int, default=64)
    s.add_argument("--n", dest="n_replicates", type=int, default=1000)
    s.add_argument("--window", type=_window, default=None)
    return p


def read_config(path: str) -> dict[str, str]:
    out = {}
    for i, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{i}: expected key=value")
        key, value = (v.strip() for v in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(parser, argv, args):
    """Re-parse with config values as defaults so explicit flags win."""
    values = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.experiment]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        if key not in known or key in ("config", "help"):
            raise ValidationError(f"unknown config key {key!r} for {args.experiment}")
        action = known[key]
        if action.nargs not in (None, "?"):
            items = raw.replace(",", " ").split()
            defaults[key] = tuple(action.type(v) if action.type else v for v in items)
        else:
            defaults[key] = action.type(raw) if action.type else raw
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _stack(args) -> RectangleStack:
    k_max = args.k_max
    if k_max is None:
        k_max = max(getattr(args, "k", 0) or 0, getattr(args, "level", 0) or 0, max(getattr(args, "k_list", [0]) or [0]), 1)
    return RectangleStack(args.gamma, k_max, args.width_alpha, tuple(args.skew))


def validate(args):
    if args.workers < 1:
        raise ValidationError("--workers must be at least 1")
    if not args.tau_max > 0:
        raise ValidationError("--tau-max must be positive")
    if hasattr(args, "gamma") and not args.gamma > 1:
        raise ValidationError("--gamma must exceed 1")
    if hasattr(args, "width_alpha") and not args.width_alpha > 0:
        raise ValidationError("--width-alpha must be positive")
    if hasattr(args, "beta") and not 0 < args.beta < 1:
        raise ValidationError("--beta must lie in (0, 1)")
    if getattr(args, "n_replicates", 1) < 1:
        raise ValidationError("--n must be at least 1")
    if not 0 <= args.seed < 2**64:
        raise ValidationError("--seed must lie in [0, 2**64)")
    for name in ("tau", "tau_prime"):
        v = getattr(args, name, None)
        if v is not None and not 0 <= v <= args.tau_max:
            raise ValidationError(f"--{name.replace('_', '-')}={v} outside [0, tau_max]")
    w = getattr(args, "window", None)
    if w is not None and not 0 <= w[0] < w[1] <= args.tau_max:
        raise ValidationError("--window must satisfy 0 <= a < b <= tau_max")
    if args.experiment == "dump-stream":
        SiteAddress(args.x, args.t)
    if hasattr(args, "gamma"):
        stack = _stack(args)
        k = getattr(args, "k", None)
        if k is not None and k > stack.k_max:
            raise ValidationError("--k exceeds --k-max")
        if args.experiment in ("estimate", "joint"):
            EventSpec(args.event, args.k, stack)
        if args.experiment in ("sticking", "coupling", "pivotal") and k < 1:
            raise ValidationError("--k must be at least 1")
        if args.experiment in ("sticking", "coupling") and not args.tau < args.tau_prime:
            raise ValidationError("need --tau < --tau-prime")
    if args.experiment == "sweep" and any(not 0 < g for g in args.grid):
        raise ValidationError("--grid values must be positive")
    if args.experiment == "bounds" and any(not K > 0 for K in args.K_grid):
        raise ValidationError("--K-grid values must be positive")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if hasattr(v, "__dataclass_fields__"):
        return _jsonable({k: getattr(v, k) for k in v.__dataclass_fields__})
    return v


def _est(e: estimators.Estimate):
    return {"mean": e.mean, "stderr": e.stderr, "n": e.n_replicates}


# experiment bodies: each returns (key, header, rows, results) -------------------


def run_dump_stream(args):
    web = WebPair(args.seed, args.tau_max)
    st = arrow_stream(web, args.web, SiteAddress(args.x, args.t))
    rows = st.to_rows()
    return (
        f"{args.web}_x{args.x}_t{args.t}",
        ("ring_index", "ring_time", "value_after"),
        rows,
        {"n_rings": len(rows) - 1, "n_switches": len(st.switch_times())},
    )


def run_geometry(args):
    stack = _stack(args)
    ok, ratio_rows = sigma_bound_audit(stack)
    return (
        f"g{args.gamma}_k{stack.k_max}",
        ("k", "d_k", "t_k", "w_k"),
        stack.rows(),
        {"horizon": stack.horizon, "sqrt_bound_ok": ok, "ratio_rows": ratio_rows},
    )


def run_estimate(args):
    stack = _stack(args)
    spec = EventSpec(args.event, args.k, stack)
    est = estimators.estimate_event(spec, args.tau, args.n_replicates, args.seed, args.workers)
    row = (spec.label(), args.gamma, args.k, args.tau, est.mean, est.stderr, est.n_replicates)
    return (
        f"{spec.label()}_g{args.gamma}_n{args.n_replicates}",
        ("event", "gamma", "k", "tau", "mean", "stderr", "n"),
        [row],
        _est(est),
    )


def run_joint(args):
    stack = _stack(args)
    spec = EventSpec(args.event, args.k, stack)
    j = estimators.joint_event(spec, args.tau, args.tau_prime, args.n_replicates, args.seed, args.workers)
    row = (spec.label(), args.tau, args.tau_prime, j.joint.mean, j.joint.stderr, j.p_tau, j.p_tau_prime, j.excess, j.excess_stderr, j.joint.n_replicates)
    return (
        f"{spec.label()}_g{args.gamma}_tp{args.tau_prime}_n{args.n_replicates}",
        ("event", "tau", "tau_prime", "mean", "stderr", "p_tau", "p_tau_prime", "excess", "excess_stderr", "n"),
        [row],
        {"joint": _est(j.joint), "excess": j.excess, "excess_stderr": j.excess_stderr},
    )


def run_sweep(args):
    stack = _stack(args)
    sw = estimators.decorrelation_sweep(
        stack, args.k, args.grid, args.n_replicates, args.seed, kind=args.event, product_n=args.product_n, workers=args.workers
    )
    res = {"a": sw.a, "a_stderr": sw.a_stderr, "c": sw.c, "fit_degenerate": sw.degenerate, "product": sw.product}
    return (
        f"{args.event}{args.k}_g{args.gamma}_n{args.n_replicates}",
        ("event", "k", "tau_prime", "delta", "joint", "joint_stderr", "p_squared", "excess", "excess_stderr", "admissible"),
        sw.to_rows(),
        res,
    )


def run_search_sub(args):
    stack = _stack(args)
    web = WebPair(args.seed, args.tau_max)
    ivs = exceptional_search_sub(web, stack, args.level, args.window)
    return (
        f"E{args.level}_g{args.gamma}",
        INTERVAL_HEADER,
        ivs.to_rows(),
        {"n_intervals": len(ivs), "measure": ivs.measure()},
    )


def run_search_super(args):
    stack = _stack(args)
    web = WebPair(args.seed, args.tau_max)
    res = exceptional_search_super(web, stack, args.k_list, args.window)
    rows = [(j, a, b) for j, (a, b) in enumerate(res.intervals)]
    return (
        f"k{'-'.join(map(str, res.k_list))}_g{args.gamma}_a{args.width_alpha}",
        ("depth", "a", "b"),
        rows,
        {"depth": res.depth, "complete": res.complete},
    )


def run_sticking(args):
    stack = _stack(args)
    web = WebPair(args.seed, args.tau_max)
    quad = stick_quadruple(web, stack, args.k, args.tau, args.tau_prime)
    prof = classify_sticking(web, quad)
    parts = decompose(quad, prof)
    recon = all(np.array_equal(reconstruct(pair, prof), path) for pair, path in zip(parts, quad.traces))
    n = prof.G.size - 1
    frac = (n - int(prof.G[-1])) / n
    return (
        f"k{args.k}_g{args.gamma}_tp{args.tau_prime}",
        ("step", "ll", "lr", "rl", "rr"),
        prof.rows(),
        {
            "split_holds": split_holds(prof),
            "reconstruction_exact": recon,
            "delta": prof.delta,
            "sticking_fraction": frac,
            "exceeds_delta_beta": frac >= prof.delta**args.beta,
        },
    )


def run_coupling(args):
    stack = _stack(args)
    rep = estimators.delta_survival(stack, args.k, args.tau, args.tau_prime, args.n_replicates, args.seed, args.j_max, workers=args.workers)
    return (
        f"k{args.k}_g{args.gamma}_tp{args.tau_prime}_n{args.n_replicates}",
        ("j", "p_ref", "p_star", "diff_stderr"),
        rep.to_rows(),
        {"dominated": rep.dominated()},
    )


def run_pivotal(args):
    stack = _stack(args)
    window = args.window or (0.0, 1.0)
    r = estimators.pivotal_chain(stack, args.k, args.n_replicates, args.seed, window, args.workers)
    row = (args.k, r.p_exists.mean, r.p_exists.stderr, r.p_at_zero.mean, r.p_at_zero.stderr, r.mean_endpoints.mean, r.mean_endpoints.stderr, r.region_size, r.ratio)
    return (
        f"U{args.k}_g{args.gamma}_a{args.width_alpha}_n{args.n_replicates}",
        ("k", "p_exists", "p_exists_stderr", "p_at_zero", "p_at_zero_stderr", "mean_endpoints", "mean_endpoints_stderr", "region_size", "ratio"),
        [row],
        {"chain_holds": r.chain_holds, "p_all": _est(r.p_all)},
    )


def run_bounds(args):
    rows, flags = [], []
    for K in args.K_grid:
        rep = bounds.bound_report(K, args.K_R)
        rows.append(rep.row())
        flags.append(rep.emptiness_flag)
    key = "grid" if args.K_R is None else f"KR{args.K_R}"
    return key, bounds.CSV_HEADER, rows, {"n_rows": len(rows), "n_empty": sum(flags)}


def run_second_moment(args):
    stack = _stack(args)
    window = args.window or (0.0, 1.0)
    r = estimators.second_moment_bound(stack, args.level, args.resolution, args.n_replicates, args.seed, window, args.workers)
    row = (args.level, r.ratio, r.ratio_stderr, r.ratio_quadrature, r.observed.mean, r.observed.stderr, r.mean_measure, int(r.degenerate))
    return (
        f"E{args.level}_g{args.gamma}_r{args.resolution}_n{args.n_replicates}",
        ("n_level", "ratio", "ratio_stderr", "ratio_quadrature", "observed", "observed_stderr", "mean_measure", "degenerate"),
        [row],
        {"ratio": r.ratio, "observed": _est(r.observed), "degenerate": r.degenerate},
    )


RUNNERS = {name: globals()["run_" + name.replace("-", "_")] for name in EXPERIMENTS}


def run(args) -> dict:
    """Run one experiment and write its files; returns the JSON summary."""
    validate(args)
    t0 = time.perf_counter()
    key, header, rows, results = RUNNERS[args.experiment](args)
    elapsed = time.perf_counter() - t0
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{args.experiment}_seed{args.seed}_{key}"
    write_csv(out / f"{stem}.csv", header, rows)
    config = {k: v for k, v in sorted(vars(args).items())}
    summary = {
        "schema": 1,
        "experiment": args.experiment,
        "config": _jsonable(config),
        "results": _jsonable(results),
        "runtime_seconds": elapsed,
    }
    (out / f"{stem}.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    status(f"{args.experiment}: wrote {out / stem}.csv ({len(rows)} rows) in {elapsed:.2f}s")
    return summary


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and not argv[0].startswith("-") and argv[0] not in EXPERIMENTS:
        status(f"dydw: unknown experiment {argv[0]!r}; choose from {', '.join(EXPERIMENTS)}")
        return EXIT_USAGE
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    try:
        if args.config:
            args = _apply_config(parser, argv, args)
        run(args)
    except ValidationError as exc:
        status(f"dydw: invalid configuration: {exc}")
        return EXIT_VALIDATION
    except DiagnosticError as exc:
        status(f"dydw: diagnostic: {exc}")
        return EXIT_DIAGNOSTIC
    except OSError as exc:
        status(f"dydw: I/O error: {exc}")
        return 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
