"""Command-line driver: ``rabi-ring <command> [options]``.

Commands write one table (CSV with a header row, or JSON) to ``--out`` or
standard output.  When ``--out`` names a file, a ``.meta.json`` sidecar
with the run parameters is written next to it.

Exit codes: 0 success (possibly with per-cell warnings), 1 usage error,
2 I/O error, 3 solver failure on a single-point command.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys

import numpy as np

from . import __version__, analytic, kernels, spectrum
from .errors import RabiRingError
from .meanfield import SeedSpec, first_order_boundary, minimize, scan_grid, warm_seeds
from .model import Functional, ModelParams, PhaseKind, momentum_grid
from .scaling import DEFAULT_SAMPLES, DEFAULT_WINDOW, scan_exponents, triple_point_exponents

log = logging.getLogger("rabiring.cli")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_SOLVER = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_angle(text: str) -> float:
    """Radians, or a multiple of pi written as ``pi:<factor>``."""
    text = text.strip()
    try:
        if text.startswith("pi:"):
            return math.pi * float(text[3:])
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}") from None


def default_workers() -> int:
    env = os.environ.get("RABI_RING_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer RABI_RING_WORKERS=%r", env)
    return os.cpu_count() or 1


def fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_value(value):
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def render(columns, rows, out_format: str) -> str:
    if out_format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
        return buf.getvalue()
    doc = {"columns": list(columns),
           "rows": [[_json_value(v) for v in row] for row in rows]}
    return json.dumps(doc, indent=1) + "\n"


def sidecar_path(path: str) -> str:
    root, _ = os.path.splitext(path)
    return root + ".meta.json"


def _check_writable(path):
    if path is None:
        return
    parent = os.path.dirname(os.path.abspath(path)) or "."
    if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
        raise OSError(f"cannot write to {path}")
    if os.path.isdir(path):
        raise OSError(f"{path} is a directory")


def emit(args, columns, rows, meta):
    text = render(columns, rows, args.format)
    if args.out is None:
        sys.stdout.write(text)
        return
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    meta = dict(meta, version=__version__, command=args.command, seed=args.seed,
                format=args.format)
    with open(sidecar_path(args.out), "w", encoding="utf-8") as fh:
        json.dump(_clean(meta), fh, indent=1, sort_keys=True)
        fh.write("\n")


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return _json_value(obj)


def _grid(lo, hi, res, name):
    if res < 2:
        if res == 1 and lo == hi:
            return np.array([lo])
        raise UsageError(f"--{name}-res must be at least 2")
    if not lo < hi:
        raise UsageError(f"--{name}-min must be smaller than --{name}-max")
    return np.linspace(lo, hi, res)


def base_params(args, g1=0.0, theta=0.0) -> ModelParams:
    try:
        return ModelParams(args.n, g1, args.j, theta, Functional(args.model))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def seed_spec(args) -> SeedSpec:
    return SeedSpec(rng_seed=args.seed, n_random=args.random_seeds)


def _params_meta(params: ModelParams):
    return {"n_sites": params.n_sites, "j_ratio": params.j_ratio,
            "model": params.functional.value}


def _boundary_samples(params, thetas):
    out = []
    for t in thetas:
        try:
            g1c, q = analytic.second_order_boundary(float(t), params)
        except RabiRingError:
            g1c, q = math.nan, math.nan
        out.append({"theta": float(t), "g1c": g1c, "q": q})
    return out


def _safe_triple_points(params):
    try:
        return analytic.triple_points(params)
    except RabiRingError:
        return []


# -- commands ---------------------------------------------------------------

def cmd_phase_diagram(args):
    params = base_params(args)
    thetas = _grid(args.theta_min, args.theta_max, args.theta_res, "theta")
    g1s = _grid(args.g1_min, args.g1_max, args.g1_res, "g1")
    cells = scan_grid(params, thetas, g1s, seed_spec(args), workers=args.workers)
    n = params.n_sites
    columns = (["theta", "g1", "phase", "chirality_sign"]
               + [f"x_{i}" for i in range(1, n + 1)] + [f"y_{i}" for i in range(1, n + 1)]
               + ["energy", "degeneracy", "status"])
    rows, failures = [], 0
    for row in cells:
        for c in row:
            if c.ok:
                vals = list(c.state.x) + list(c.state.y)
                rows.append([c.theta, c.g1, c.phase.kind.value, c.phase.chirality_sign,
                             *vals, c.energy, c.degeneracy, c.status])
            else:
                failures += 1
                rows.append([c.theta, c.g1, "", 0, *([math.nan] * 2 * n),
                             math.nan, 0, c.status])
    if failures:
        log.warning("%d of %d cells failed to converge", failures, len(rows))
    meta = {"params": _params_meta(params),
            "theta": {"min": args.theta_min, "max": args.theta_max, "res": args.theta_res},
            "g1": {"min": args.g1_min, "max": args.g1_max, "res": args.g1_res},
            "random_seeds": args.random_seeds,
            "failed_cells": failures,
            "triple_points": _safe_triple_points(params),
            "second_order_boundary": _boundary_samples(params, thetas)}
    emit(args, columns, rows, meta)
    return EXIT_OK


def _first_order_brackets(points, width):
    inner = sorted(t for t in points if t > 0.0)
    out = []
    for i, t in enumerate(inner):
        lo = 0.5 * (inner[i - 1] + t) if i > 0 else (0.5 * t if 0.0 in points else t - width)
        hi = 0.5 * (t + inner[i + 1]) if i + 1 < len(inner) else min(t + width, math.pi)
        out.append((t, max(lo, 0.0), hi))
    return out


def cmd_boundaries(args):
    params = base_params(args)
    thetas = _grid(args.theta_min, args.theta_max, args.theta_res, "theta")
    n = params.n_sites
    ks = sorted(int(round(q * n / (2 * math.pi))) for q in momentum_grid(n))
    qs = [2 * math.pi * k / n for k in ks]
    columns = ["theta"] + [f"g1c_k{k}" for k in ks] + ["g1c", "q_star"]
    rows = []
    for t in thetas:
        line = []
        for q in qs:
            try:
                line.append(analytic.critical_g1(float(q), float(t), params))
            except RabiRingError:
                line.append(math.nan)
        g1c, q_star = analytic.second_order_boundary(float(t), params)
        rows.append([float(t), *line, g1c, q_star])
    points = _safe_triple_points(params)
    first = []
    seeds = seed_spec(args)
    for g1 in args.first_order_g1 or ():
        for t0, lo, hi in _first_order_brackets(points, args.bracket):
            entry = {"g1": g1, "triple_point": t0, "bracket": [lo, hi]}
            try:
                entry["theta"] = first_order_boundary(params.with_(g1=g1), lo, hi, seeds=seeds)
            except RabiRingError as exc:
                log.warning("first-order boundary near %.6g at g1=%g: %s", t0, g1, exc)
                entry["theta"] = math.nan
                entry["error"] = str(exc)
            first.append(entry)
    meta = {"params": _params_meta(params),
            "momenta": {f"k{k}": float(q) for k, q in zip(ks, qs)},
            "triple_points": points,
            "first_order": first}
    emit(args, columns, rows, meta)
    return EXIT_OK


def _require_qrr(args, name):
    if args.model != Functional.QRR_CO.value:
        raise UsageError(f"{name} is defined for the qrr model only")


def cmd_spectrum(args):
    _require_qrr(args, "spectrum")
    params = base_params(args, theta=args.theta)
    g1c, q_star = analytic.second_order_boundary(params.physical_theta, params)
    lo = args.g1_min if args.g1_min is not None else 0.9 * g1c
    hi = args.g1_max if args.g1_max is not None else 1.1 * g1c
    g1s = _grid(lo, hi, args.g1_res, "g1")
    n = params.n_sites
    columns = (["g1", "g1_over_g1c"] + [f"eps_{i}" for i in range(1, n + 1)]
               + ["stable", "max_imag", "phase", "status"])
    rows, prev, failures = [], None, 0
    seeds = seed_spec(args)
    for g1 in g1s:
        p = params.with_(g1=float(g1))
        spec = seeds if prev is None else warm_seeds(prev)
        try:
            sol = minimize(p, spec)
            if prev is not None and sol.phase.kind is PhaseKind.NORMAL and g1 > g1c:
                sol = minimize(p, seeds)
            res = spectrum.excitation_energies(sol.state, p)
        except RabiRingError as exc:
            failures += 1
            rows.append([float(g1), float(g1) / g1c, *([math.nan] * n), False, math.nan, "",
                         f"failed: {type(exc).__name__}"])
            continue
        prev = sol.state
        rows.append([float(g1), float(g1) / g1c, *res.energies, res.stable, res.max_imag,
                     str(sol.phase), "ok"])
    if failures:
        log.warning("%d of %d sweep points failed", failures, len(rows))
    meta = {"params": dict(_params_meta(params), theta=params.theta),
            "g1c": g1c, "q_star": q_star,
            "g1": {"min": lo, "max": hi, "res": args.g1_res}}
    emit(args, columns, rows, meta)
    return EXIT_OK


def cmd_scaling(args):
    _require_qrr(args, "scaling")
    params = base_params(args)
    if args.theta is not None:
        thetas = np.array([args.theta])
    else:
        thetas = _grid(args.theta_min, args.theta_max, args.theta_res, "theta")
    window = (args.window_min, args.window_max)
    if not 0 < window[0] < window[1] < 1:
        raise UsageError("window must satisfy 0 < --window-min < --window-max < 1")
    columns = ["theta", "side", "mode", "gamma", "r_squared", "window_min", "window_max",
               "status"]
    rows = []
    for item in scan_exponents(params, thetas, modes=tuple(args.modes), window=window,
                               n_samples=args.samples, workers=args.workers):
        if hasattr(item, "gamma"):
            rows.append([item.theta, item.side, item.mode_index, item.gamma, item.r_squared,
                         window[0], window[1], "ok"])
        else:
            rows.append([item.theta, item.side, item.mode_index, math.nan, math.nan,
                         window[0], window[1], f"failed: {item.reason}"])
    if args.triple_points:
        for k, t in enumerate(_safe_triple_points(params)):
            try:
                tp = triple_point_exponents(params, k, window, args.samples)
            except RabiRingError as exc:
                log.warning("triple point %.6g: %s", t, exc)
                continue
            for side, fits in (("below", tp.below), ("above", tp.above)):
                for f in fits:
                    rows.append([f.theta, side, f.mode_index, f.gamma, f.r_squared,
                                 window[0], window[1], "triple"])
    failures = sum(1 for r in rows if r[-1].startswith("failed"))
    if failures:
        log.warning("%d of %d fits rejected", failures, len(rows))
    meta = {"params": _params_meta(params), "window": list(window), "samples": args.samples,
            "triple_points": _safe_triple_points(params)}
    emit(args, columns, rows, meta)
    return EXIT_OK


def cmd_minimize(args):
    params = base_params(args, g1=args.g1, theta=args.theta)
    try:
        sol = minimize(params, seed_spec(args))
    except RabiRingError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    n = params.n_sites
    columns = (["theta", "g1", "phase", "chirality_sign"]
               + [f"x_{i}" for i in range(1, n + 1)] + [f"y_{i}" for i in range(1, n + 1)]
               + ["energy", "degeneracy", "gradient_norm", "residual_norm"])
    row = [params.theta, params.g1, sol.phase.kind.value, sol.phase.chirality_sign,
           *sol.state.x, *sol.state.y, sol.energy, sol.degeneracy, sol.gradient_norm,
           sol.residual_norm]
    meta = {"params": dict(_params_meta(params), theta=params.theta, g1=params.g1),
            "backend": kernels.BACKEND,
            "local_minima": [{"excess_energy": m.excess,
                              "phase": str(m.phase) if m.phase else None}
                             for m in sol.local_minima]}
    emit(args, columns, [row], meta)
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=4, help="number of cavities (>= 3)")
    common.add_argument("--j", type=float, default=0.05, help="hopping strength J/omega")
    common.add_argument("--model", choices=[f.value for f in Functional], default="qrr")
    common.add_argument("--seed", type=int, default=42, help="random-seed generator seed")
    common.add_argument("--random-seeds", type=int, default=32,
                        help="random starting points per minimization")
    common.add_argument("--workers", type=int, default=default_workers())
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    def theta_range(p, res=41):
        p.add_argument("--theta-min", type=parse_angle, default=0.0)
        p.add_argument("--theta-max", type=parse_angle, default=math.pi)
        p.add_argument("--theta-res", type=int, default=res)

    parser = _Parser(prog="rabi-ring", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("phase-diagram", parents=[common], help="minimize on a (theta, g1) grid")
    theta_range(p)
    p.add_argument("--g1-min", type=float, default=0.4)
    p.add_argument("--g1-max", type=float, default=0.6)
    p.add_argument("--g1-res", type=int, default=41)
    p.set_defaults(func=cmd_phase_diagram)

    p = sub.add_parser("boundaries", parents=[common],
                       help="analytic critical lines, triple points, first-order lines")
    theta_range(p, 201)
    p.add_argument("--first-order-g1", type=float, nargs="*", default=None,
                   help="couplings at which to locate first-order lines numerically")
    p.add_argument("--bracket", type=float, default=0.1,
                   help="outer half-width of the first-order search bracket (rad)")
    p.set_defaults(func=cmd_boundaries)

    p = sub.add_parser("spectrum", parents=[common], help="excitation energies across g1")
    p.add_argument("--theta", type=parse_angle, required=True)
    p.add_argument("--g1-min", type=float, default=None)
    p.add_argument("--g1-max", type=float, default=None)
    p.add_argument("--g1-res", type=int, default=41)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("scaling", parents=[common], help="power-law exponents of soft modes")
    theta_range(p, 21)
    p.add_argument("--theta", type=parse_angle, default=None, help="single angle")
    p.add_argument("--modes", type=int, nargs="+", default=[1])
    p.add_argument("--window-min", type=float, default=DEFAULT_WINDOW[0])
    p.add_argument("--window-max", type=float, default=DEFAULT_WINDOW[1])
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--triple-points", action="store_true",
                   help="also fit both soft modes at every triple point")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("minimize", parents=[common], help="single-point mean-field minimum")
    p.add_argument("--theta", type=parse_angle, required=True)
    p.add_argument("--g1", type=float, required=True)
    p.set_defaults(func=cmd_minimize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.workers < 1:
        parser.error("--workers must be positive")
    try:
        _check_writable(args.out)
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
