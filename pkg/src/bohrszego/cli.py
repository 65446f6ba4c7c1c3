"""Command-line interface: ``bohr-szego <subcommand> [options]``.

Structured results are JSON (sorted keys, shortest round-trip floats),
profiles and ladders are CSV with 17 significant digits.  Output files are
written to a temporary file and renamed, so a failed run leaves nothing
behind.  Exit codes: 0 success, 1 a checked property failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import bohr, poisson, seqfactor, szego, torus, witness
from .errors import DegenerateWeightError, DomainError, NotOuterError, ResourceError

THREADS_ENV = "BOHR_SZEGO_THREADS"


class InputError(Exception):
    """Bad command-line input; reported with exit code 2."""


# I/O helpers -----------------------------------------------------------------

def read_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def fmt(x: float) -> str:
    return f"{x:.17g}"


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def write_output(text: str, out: str | None) -> None:
    """Write to ``out`` atomically (temp file in the same directory, then rename), or to stdout."""
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    target = Path(out)
    fd, tmp = tempfile.mkstemp(dir=target.parent if str(target.parent) else ".", prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_floats(text: str, what: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"bad {what} list {text!r}") from exc


def parse_ints(text: str, what: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"bad {what} list {text!r}") from exc


def parse_point(text: str) -> list:
    try:
        return [complex(x.strip().replace(" ", "")) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"bad point {text!r}; use e.g. 0.3,0.1+0.2j") from exc


def load_poly(path: str) -> bohr.LiftedPolynomial:
    return bohr.poly_from_json(read_json(path))


def load_series(path: str) -> bohr.DirichletSeries:
    return bohr.series_from_json(read_json(path))


def complex_json(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def finite_or_str(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


# Subcommands -----------------------------------------------------------------

def cmd_lift(args):
    return dump_json(bohr.poly_to_json(bohr.lift(load_series(args.input))))


def cmd_unlift(args):
    return dump_json(bohr.series_to_json(bohr.unlift(load_poly(args.input))))


def cmd_eval(args):
    if args.series:
        f = load_series(args.series)
        return dump_json({"value": complex_json(complex(bohr.evaluate_line(f, args.sigma, args.t)))})
    if args.poly:
        F = load_poly(args.poly)
        return dump_json({"value": complex_json(bohr.evaluate_lift(F, parse_point(args.point or "")))})
    raise InputError("eval needs --series or --poly")


def cmd_metric(args):
    F = load_poly(args.poly)
    grid = torus.QuadratureGrid(max(F.max_var, 1), args.grid) if args.grid else None
    if args.method == "qmc":
        k = max(F.max_var, 1)
        transform = {"d0": torus.log1p_abs, "p": torus.abs_power(args.p), "log": torus.log_abs}[args.kind]
        call = poisson.boundary_callable(F)
        rep = torus.qmc_integral(lambda *w: transform(call(*w)), k, args.lattice, seed=args.seed)
        value = rep.value ** (1.0 / args.p) if args.kind == "p" else rep.value
        return dump_json({"kind": args.kind, "value": value, "error": rep.error, "method": rep.method})
    if args.kind == "d0":
        value, error, method = torus.metric_d0(F, grid), 0.0, "grid"
    elif args.kind == "p":
        value, error, method = torus.metric_p(F, args.p, grid), 0.0, "grid"
    else:
        rep = torus.log_modulus_integral(F, grid)
        value, error, method = rep.value, rep.error, rep.method
    return dump_json({"kind": args.kind, "value": value, "error": error, "method": method})


def _monotone(values, increasing: bool, slack: float) -> bool:
    pairs = zip(values, values[1:])
    if increasing:
        return all(b >= a - slack for a, b in pairs)
    return all(b <= a + slack for a, b in pairs)


def cmd_profile(args):
    if args.mode == "r":
        if not args.poly:
            raise InputError("profile --mode r needs --poly")
        params = parse_floats(args.values, "radius") if args.values else list(np.linspace(0, 1, 11))
        values = torus.d0_profile(load_poly(args.poly), params)
        increasing = True
    elif args.mode == "sigma":
        if not args.series:
            raise InputError("profile --mode sigma needs --series")
        params = parse_floats(args.values, "sigma") if args.values else list(np.linspace(0, 2, 11))
        values = torus.sigma_profile(load_series(args.series), params)
        increasing = False
    else:
        if not args.series:
            raise InputError("profile --mode k needs --series")
        params = parse_ints(args.values, "k") if args.values else [0, 1, 2, 3]
        values = torus.abschnitt_profile(load_series(args.series), args.sigma, params)
        increasing = True
    rows = [(float(p), float(v), 0.0) for p, v in zip(params, values)]
    text = csv_text(["parameter", "value", "error"], rows)
    if not _monotone(values, increasing, 1e-8):
        args.deferred_failure = f"profile is not {'non-decreasing' if increasing else 'non-increasing'}"
    return text


def cmd_ergodic(args):
    f = load_series(args.series)
    if args.sigma < 0:
        raise InputError("sigma must be >= 0")
    torus_value = torus.metric_d0(bohr.lift(bohr.vertical_shift(f, args.sigma)))
    cfg = torus.LineAverageConfig(T0=args.T0, T_max=args.T_max, dt=args.dt)
    dt = cfg.dt or torus.default_step(f)
    rows, gaps = [], []
    for T in cfg.windows():
        value = torus.window_mean(f, args.sigma, T, dt, torus.log1p_abs)
        gaps.append(abs(value - torus_value))
        rows.append((float(T), value, torus_value, gaps[-1]))
    summary = {
        "final_gap": gaps[-1] if gaps else None,
        "gap_non_increasing": _monotone(gaps, False, 0.0),
        "dt": dt,
    }
    tol = args.tol if args.tol is not None else 1e-3
    if len(rows) > 1 and abs(rows[-1][1] - rows[-2][1]) > tol:
        summary["warning"] = "line average not settled: last two windows differ by more than tol"
    sys.stderr.write(dump_json(summary))
    return csv_text(["T", "line_average", "torus_value", "gap"], rows)


def _weight(args) -> szego.WeightSpec:
    if not args.weight:
        raise InputError("--weight is required")
    return szego.weight_from_json(read_json(args.weight))


def cmd_szego(args):
    K = _weight(args)
    k = max(args.vars, K.k)
    degrees = parse_ints(args.ladder, "degree") if args.ladder else [args.degree]
    degrees = sorted(set(degrees))
    cfg = szego.SzegoConfig(p=args.p, k=k, d=degrees[-1], nodes=args.grid)
    results = szego.szego_ladder(K, cfg, degrees)
    last = results[-1]
    out = last.to_json()
    out["ladder"] = [{"d": d, "S": r.value, "converged": r.converged} for d, r in zip(degrees, results)]
    slack = 1e-10 if args.p == 2 else 1e-6
    out["monotone"] = _monotone([r.value for r in results], False, slack)
    out["sandwich"] = all(r.in_sandwich(1e-8) for r in results)
    if not (out["monotone"] and out["sandwich"]):
        args.deferred_failure = "ladder is not monotone or leaves the sandwich interval"
    return dump_json(out)


def cmd_fourier(args):
    K = _weight(args)
    alpha = parse_ints(args.alpha, "index")
    grid = torus.QuadratureGrid(max(K.k, len(alpha)), args.grid) if args.grid else None
    return dump_json({"alpha": alpha, "value": complex_json(szego.fourier_coeff(K, alpha, grid))})


def cmd_outer(args):
    rep = poisson.outer_gap(load_poly(args.poly), tol=args.tol if args.tol is not None else poisson.OUTER_TOL)
    return dump_json(rep.to_json())


def cmd_jensen(args):
    res = poisson.poisson_log_mean(load_poly(args.poly), parse_point(args.point or ""))
    return dump_json({
        "gap": finite_or_str(res["gap"]),
        "log_at_point": finite_or_str(res["log_at_point"]),
        "poisson_log_mean": finite_or_str(res["value"]),
        "error": res["error"],
    })


def _read_sequence(path: str) -> np.ndarray:
    data = read_json(path)
    if not isinstance(data, list):
        raise InputError(f"{path}: expected a JSON array")
    try:
        if any(isinstance(v, list) for v in data):
            return np.array([complex(*v) if isinstance(v, list) else complex(v) for v in data])
        return np.array([float(v) for v in data])
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: entries must be numbers or [re, im] pairs") from exc


def cmd_factorize(args):
    a = _read_sequence(args.input)
    result = seqfactor.factorize_l1(a)
    checks = seqfactor.verify_factorization(a, result)
    out = result.to_json()
    out["checks"] = {name: rep.to_json() for name, rep in checks.items()}
    if not seqfactor.all_passed(checks):
        args.deferred_failure = "factorisation failed a check"
    return dump_json(out)


def cmd_witness(args):
    rep = witness.divergence_witness(args.J)
    if not rep.passed:
        args.deferred_failure = "divergence certificate failed"
    return dump_json(rep.to_json())


# Parser ----------------------------------------------------------------------

def _global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--out", default=d(None), help="output file (default stdout)")
    parser.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
    parser.add_argument("--threads", type=int, default=d(None),
                        help=f"BLAS thread cap; {THREADS_ENV} overrides it")
    parser.add_argument("--tol", type=float, default=d(None), help="tolerance for checks")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bohr-szego", description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    _global_options(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, aliases=()):
        p = sub.add_parser(name, parents=[common], help=help_text, aliases=list(aliases),
                           allow_abbrev=False)
        p.set_defaults(func=func)
        return p

    p = add("lift", cmd_lift, "Dirichlet series JSON -> lifted polynomial JSON")
    p.add_argument("--input", required=True)
    p = add("unlift", cmd_unlift, "lifted polynomial JSON -> Dirichlet series JSON")
    p.add_argument("--input", required=True)

    p = add("eval", cmd_eval, "evaluate a series on a vertical line or a polynomial at a point")
    p.add_argument("--series")
    p.add_argument("--poly")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--point", help="comma-separated complex coordinates")

    p = add("metric", cmd_metric, "Haar-mean metrics of a polynomial")
    p.add_argument("--poly", required=True)
    p.add_argument("--kind", choices=["d0", "p", "log"], default="d0")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--grid", type=int, help="nodes per axis")
    p.add_argument("--method", choices=["grid", "qmc"], default="grid")
    p.add_argument("--lattice", type=int, default=65537, help="lattice size for --method qmc")

    p = add("profile", cmd_profile, "CSV profile in r, sigma or k")
    p.add_argument("--mode", choices=["r", "sigma", "k"], required=True)
    p.add_argument("--poly")
    p.add_argument("--series")
    p.add_argument("--values", help="comma-separated parameter values")
    p.add_argument("--sigma", type=float, default=0.0)

    p = add("ergodic", cmd_ergodic, "vertical-line averages against the torus integral")
    p.add_argument("--series", required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--T0", type=float, default=1e4 / 128)
    p.add_argument("--T-max", dest="T_max", type=float, default=1e4)
    p.add_argument("--dt", type=float)

    p = add("szego", cmd_szego, "truncated Szegő infimum with certified bounds")
    p.add_argument("--weight", required=True, help="WeightSpec JSON file")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--vars", type=int, default=1)
    p.add_argument("--degree", type=int, default=4)
    p.add_argument("--grid", type=int, help="nodes per axis (default 2d + deg K + 1)")
    p.add_argument("--ladder", help="comma-separated degrees")

    p = add("fourier", cmd_fourier, "one Fourier coefficient of a weight")
    p.add_argument("--weight", required=True)
    p.add_argument("--alpha", required=True, help="signed exponents, e.g. 1,-1")
    p.add_argument("--grid", type=int)

    p = add("outer", cmd_outer, "outer-function gap of a polynomial", aliases=["outer-check"])
    p.add_argument("--poly", required=True)
    p = add("jensen", cmd_jensen, "Poisson-Jensen gap at a polydisk point")
    p.add_argument("--poly", required=True)
    p.add_argument("--point", default="")

    p = add("factorize", cmd_factorize, "factor a summable sequence as b * c")
    p.add_argument("--input", required=True, help="JSON array of numbers or [re, im] pairs")

    p = add("divergence-witness", cmd_witness, "doubling-prime series and its divergence certificate")
    p.add_argument("--J", type=int, default=20)
    return parser


def _thread_limit(args):
    env = os.environ.get(THREADS_ENV)
    threads = args.threads
    if env:
        try:
            threads = int(env)
        except ValueError as exc:
            raise InputError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
    if threads is None:
        return nullcontext()
    if threads < 1:
        raise InputError("thread count must be positive")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=threads)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.deferred_failure = None
    try:
        with _thread_limit(args):
            text = args.func(args)
        write_output(text, args.out)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OverflowError, DomainError, DegenerateWeightError, ResourceError, NotOuterError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if args.deferred_failure:
        print(f"check failed: {args.deferred_failure}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
