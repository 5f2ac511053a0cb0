"""Command line interface.

Subcommands: characteristic, bound, estimate, sweep, counterexample,
khasminskii.  Measures come from --measure (inline YAML/JSON) or
--measure-file; reports go to --output (default stdout) as CSV or JSON.
Runs with the same config and seed write byte-identical files, for any
--workers value.

Exit codes: 0 success (and all checks passed), 1 validity/numerical
failure or a failed check, 2 bad usage or config.
"""

from __future__ import annotations

import argparse
import sys

from . import experiments
from .bounds import composite_upper_bound, concentration_bound, khasminskii_bound
from .characteristic import CharacteristicQuery, characteristic, khasminskii_horizon
from .errors import CapacityError, MeasureConfigError, QuadratureError, ValidityError
from .experiments import _write_csv, _write_json
from .measure import load_measure, parse_measure_text
from .simulation import log_exp_moment


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}")


def _add_measure_args(sub):
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--measure", help="inline YAML/JSON measure config")
    group.add_argument("--measure-file", help="path to a YAML/JSON measure config")


def _add_output_args(sub, default_format="csv"):
    sub.add_argument("--output", help="output file (default stdout)")
    sub.add_argument(
        "--format", choices=("csv", "json"), default=default_format,
        help=f"output format (default {default_format})",
    )


def _add_mc_args(sub):
    sub.add_argument("--n-paths", type=int, default=100_000)
    sub.add_argument("--n-steps", type=int, default=10_000)
    sub.add_argument("--seed", type=int, default=42)
    sub.add_argument("--eta", type=float, default=None,
                     help="kernel bandwidth (default 0.4 sqrt(t/n_steps))")


def _measure_of(args):
    if args.measure is not None:
        return parse_measure_text(args.measure)
    return load_measure(args.measure_file)


def _out_of(args):
    return args.output if args.output is not None else sys.stdout


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loctimes",
        description="Weighted Brownian local times: bounds, estimates, sweeps.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("characteristic", help="expected weighted local time")
    _add_measure_args(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--x", type=_float_list, default=None,
                   help="comma-separated starts (default: atom locations or 0)")
    p.add_argument("--s", type=_float_list, default=None,
                   help="comma-separated time spans (default: t)")
    _add_output_args(p)
    p.set_defaults(func=_cmd_characteristic)

    p = subs.add_parser("bound", help="certified exponential-moment bounds")
    _add_measure_args(p)
    p.add_argument("--method", choices=("concentration", "khasminskii", "composite"),
                   required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--chi", type=float, default=0.1)
    p.add_argument("--output", help="output file (default stdout)")
    p.set_defaults(func=_cmd_bound)

    p = subs.add_parser("estimate", help="Monte Carlo log exponential moment")
    _add_measure_args(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--x", type=float, default=0.0)
    _add_mc_args(p)
    _add_output_args(p, default_format="json")
    p.set_defaults(func=_cmd_estimate)

    p = subs.add_parser("sweep", help="scaled log moments on a decreasing eps grid")
    _add_measure_args(p)
    p.add_argument("--eps-grid", type=_float_list, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--starts", type=_float_list, default=None)
    p.add_argument("--workers", type=int, default=1)
    _add_mc_args(p)
    _add_output_args(p)
    p.set_defaults(func=_cmd_sweep)

    p = subs.add_parser("counterexample", help="paired-atom measure sweep")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--eps-grid", type=_float_list, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--starts", type=_float_list, default=None)
    p.add_argument("--workers", type=int, default=1)
    _add_mc_args(p)
    _add_output_args(p)
    p.set_defaults(func=_cmd_counterexample)

    p = subs.add_parser("khasminskii", help="simulate E e^L on the certified horizon")
    _add_measure_args(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--starts", type=_float_list, default=None)
    _add_mc_args(p)
    _add_output_args(p, default_format="json")
    p.set_defaults(func=_cmd_khasminskii)

    return parser


def _cmd_characteristic(args) -> int:
    measure = _measure_of(args)
    xs = args.x
    if xs is None:
        xs = [a.location for a in measure.atoms] or [0.0]
    spans = args.s if args.s is not None else [args.t]
    rows = []
    for s in spans:
        for x in xs:
            value = characteristic(CharacteristicQuery(measure, args.eps, s, x))
            rows.append({"x": x, "s": s, "value": value})
    out = _out_of(args)
    if args.format == "json":
        _write_json({"schema": 1, "kind": "characteristic", "eps": args.eps,
                     "rows": rows}, out)
    else:
        _write_csv(out, ["x", "s", "value"], ([r["x"], r["s"], r["value"]] for r in rows))
    return 0


def _cmd_bound(args) -> int:
    measure = _measure_of(args)
    if args.method == "concentration":
        cert = concentration_bound(measure, args.lam, args.gamma, args.t, args.eps)
    elif args.method == "khasminskii":
        cert = khasminskii_bound(measure, args.eps, args.t)
    else:
        cert = composite_upper_bound(measure, args.t, args.eps, p=args.p, chi=args.chi)
    _write_json({"schema": 1, "kind": "bound"} | cert.as_dict(), _out_of(args))
    return 0


def _cmd_estimate(args) -> int:
    measure = _measure_of(args)
    result = log_exp_moment(
        measure, args.eps, args.t, args.x,
        args.n_paths, args.n_steps, args.seed, args.eta,
    )
    payload = {
        "schema": 1,
        "kind": "estimate",
        "eps": args.eps,
        "t": args.t,
        "x": args.x,
        "n_paths": args.n_paths,
        "n_steps": args.n_steps,
        "seed": args.seed,
        "log_moment": result.estimate,
        "log_moment_se": result.std_error,
        "lambda_hat": args.eps ** 2 * result.estimate,
        "lambda_se": args.eps ** 2 * result.std_error,
    }
    out = _out_of(args)
    if args.format == "json":
        _write_json(payload, out)
    else:
        keys = list(payload)
        _write_csv(out, keys, [[payload[k] for k in keys]])
    return 0


def _cmd_sweep(args) -> int:
    measure = _measure_of(args)
    report = experiments.asymptotic_sweep(
        measure, args.t, args.eps_grid, starts=args.starts,
        n_paths=args.n_paths, n_steps=args.n_steps, seed=args.seed,
        eta=args.eta, workers=args.workers,
    )
    out = _out_of(args)
    if args.format == "json":
        experiments.write_sweep_json(report, out)
    else:
        experiments.write_sweep_csv(report, out)
    return 0


def _cmd_counterexample(args) -> int:
    report = experiments.counterexample_run(
        args.K, args.t, args.eps_grid,
        n_paths=args.n_paths, n_steps=args.n_steps, seed=args.seed,
        eta=args.eta, workers=args.workers, starts=args.starts,
    )
    out = _out_of(args)
    if args.format == "json":
        experiments.write_counterexample_json(report, out)
    else:
        experiments.write_counterexample_csv(report, out)
    return 0


def _cmd_khasminskii(args) -> int:
    measure = _measure_of(args)
    report = experiments.khasminskii_check(
        measure, args.eps, n_paths=args.n_paths, n_steps=args.n_steps,
        seed=args.seed, eta=args.eta, starts=args.starts,
    )
    out = _out_of(args)
    if args.format == "json":
        experiments.write_khasminskii_json(report, out)
    else:
        experiments.write_khasminskii_csv(report, out)
    return 0 if report.passed else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (QuadratureError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MeasureConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
