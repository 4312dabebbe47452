"""Command-line interface: ``arakzar <subcommand> ...``.

Exit codes: 0 ok, 2 input error, 3 numeric failure, 4 property violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from . import green_curve as gc
from .families import check_example_params, example_divisor, example_phi, example_pieces, random_degree_zero, random_divisors
from .fiber_config import FiberConfiguration, VerticalDivisorData, greatest_pi_nef, random_configuration
from .intersection import NotIntegrableError, hodge_check, intersect
from .positivity_zariski import (
    InconsistencyError,
    NotPseudoEffectiveError,
    PropertyViolation,
    gram_negative_part,
    is_big,
    is_integrable,
    is_nef,
    is_pseudo_effective,
    is_relatively_nef,
    verify_main_theorem,
    zariski,
)
from .toric_model import ToricArithDivisor, is_effective
from .volumes import asymptotic_mult, chi_estimate, count_sections, okounkov, vol, vol_chi

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_PROPERTY = 0, 2, 3, 4


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# output


def _encode(obj, indent=2, level=0) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_encode(v) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        return "%.17g" % x
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    return json.dumps(str(obj))


def dumps(obj) -> str:
    """Deterministic JSON with floats at 17 significant digits (inf/nan as null)."""
    return _encode(obj) + "\n"


def _emit(obj, out: str | None):
    text = dumps(obj)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}:{e.lineno}:{e.colno}: malformed JSON: {e.msg}") from None


def _load_divisor(path: str) -> tuple[dict, ToricArithDivisor]:
    raw = _load_json(path)
    try:
        return raw, ToricArithDivisor.from_json(raw)
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"{path}: invalid divisor: {e}") from None


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow(["%.17g" % v for v in r])


def _dump_csv(csv_dir, D, ok, grid_points, window):
    if not csv_dir:
        return
    d = Path(csv_dir)
    L = gc.support_window(D.green) if window is None else window
    ts = np.linspace(-L, L, grid_points)
    q = ok.conjugate.q if ok.conjugate is not None else gc.convex_envelope(D.green, n=grid_points)
    _write_csv(d / "profile.csv", ["t", "u", "envelope"], zip(ts, D.green(ts), q(ts)))
    if ok.delta is not None:
        _write_csv(d / "concave_transform.csv", ["x", "G"], ok.samples(max(2, min(grid_points, 2001))))


# ---------------------------------------------------------------------------
# subcommands


def _okounkov(D, args):
    if D.deg < -1e-9:
        return okounkov(D)
    q = gc.convex_envelope(D.green, n=args.grid_points)
    return okounkov(D, envelope=q)


def _okounkov_json(ok, n=101):
    return {
        "delta": list(ok.delta) if ok.delta is not None else None,
        "theta": list(ok.theta) if ok.theta is not None else None,
        "G_samples": ok.samples(n),
    }


def cmd_analyze(args):
    t0 = time.perf_counter()
    raw, D = _load_divisor(args.config)
    ok = _okounkov(D, args)
    integrable = is_integrable(D)
    psef = is_pseudo_effective(D, ok=ok)
    nef = is_nef(D)
    report = {
        "schema": SCHEMA_VERSION,
        "input": raw,
        "deg_self": intersect(D, D) if integrable else None,
        "vol": vol(D, ok),
        "vol_chi": vol_chi(D, ok),
        "predicates": {
            "nef": nef,
            "relatively_nef": is_relatively_nef(D),
            "pseudo_effective": psef,
            "big": is_big(D, ok=ok),
            "integrable": integrable,
            "effective": is_effective(D),
        },
        "okounkov": _okounkov_json(ok),
        "zariski": zariski(D, eq_tol=args.tol, ok=ok).to_json() if psef and integrable else None,
        "mu": {"at_H0": asymptotic_mult(D, "H0", ok), "at_H1": asymptotic_mult(D, "H1", ok)},
    }
    _dump_csv(args.csv_dir, D, ok, args.grid_points, args.window)
    report["timing"] = {"milliseconds": 1000.0 * (time.perf_counter() - t0)}
    _emit(report, args.out)
    return EXIT_OK


def cmd_volume(args):
    _, D = _load_divisor(args.config)
    ok = _okounkov(D, args)
    out = _okounkov_json(ok)
    out = {"delta": out["delta"], "theta": out["theta"], "vol": vol(D, ok), "vol_chi": vol_chi(D, ok), "G_samples": out["G_samples"]}
    _dump_csv(args.csv_dir, D, ok, args.grid_points, args.window)
    _emit(out, args.out)
    return EXIT_OK


def cmd_intersect(args):
    _, D1 = _load_divisor(args.config)
    _, D2 = _load_divisor(args.config2)
    _emit({"deg": intersect(D1, D2)}, args.out)
    return EXIT_OK


def cmd_zariski(args):
    _, D = _load_divisor(args.config)
    ok = _okounkov(D, args)
    try:
        rep = zariski(D, eq_tol=args.tol, ok=ok)
    except NotPseudoEffectiveError as e:
        raise InputError(str(e)) from None
    out = rep.to_json()
    if rep.horizontal():
        labels, G = gram_negative_part(D, rep, eq_tol=args.tol)
        out["negative_gram"] = {"labels": labels, "matrix": G}
    _emit(out, args.out)
    bad = [k for k, v in rep.flags.items() if k.startswith(("consistent", "negative_part", "vol_P")) and not v]
    return EXIT_PROPERTY if bad else EXIT_OK


def cmd_fiber(args):
    raw = _load_json(args.config)
    try:
        cfg = FiberConfiguration.from_json(raw)
        data = VerticalDivisorData(raw["v"], raw["e"])
        res = greatest_pi_nef(cfg, data)
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"{args.config}: {e}") from None
    _emit({"q": res.q, "n": res.n, "slack": res.slack, "iterations": res.iterations}, args.out)
    return EXIT_OK


def _m_values(args):
    if args.m:
        return sorted(set(args.m))
    base = [1, 2, 5, 10, 25, 50, 100, 200, 500, 1000]
    return [m for m in base if m <= args.m_max]


def cmd_count(args):
    _, D = _load_divisor(args.config)
    if any(m < 1 for m in (args.m or [])):
        raise InputError("m must be a positive integer")
    conj = gc.Conjugate(D.green) if D.deg >= 0 else None
    rows = []
    for m in _m_values(args):
        c = count_sections(D, m, cap=args.cap, conj=conj)
        row = {"m": m, "log_count_lower": c.log_count_lower, "log_count_upper": c.log_count_upper, "exact": c.exact}
        if D.deg >= 0:
            lo, hi = chi_estimate(D, m, conj=conj)
            row["chi"] = [lo, hi]
        rows.append(row)
    ok = okounkov(D)
    _emit({"vol": vol(D, ok), "vol_chi": vol_chi(D, ok), "counts": rows}, args.out)
    return EXIT_OK


def cmd_example(args):
    try:
        check_example_params(args.a0, args.a1)
    except ValueError as e:
        raise InputError(str(e)) from None
    ex = example_pieces(args.a0, args.a1)
    D = example_divisor(args.a0, args.a1)
    rep = zariski(D, eq_tol=args.tol)
    phi = example_phi(args.a0, args.a1)
    pieces = {"P": ex.P, "N1": ex.N1, "N2": ex.N2}
    names = list(pieces)
    pair = {f"{a}.{b}": intersect(pieces[a], pieces[b]) for i, a in enumerate(names) for b in names[i:]}
    closed = ex.gram_closed_form()
    gram = np.array([[pair["N1.N1"], pair["N1.N2"]], [pair["N1.N2"], pair["N2.N2"]]])
    r1, r2 = ex.breakpoints
    ts = [2 * math.log(r1), 2 * math.log(r2)]
    samples = {name: [float(P.green(t)) for t in ts] for name, P in pieces.items()}
    checks = {
        "phi_vartheta": abs(float(phi(ex.vartheta))) <= 1e-10,
        "phi_theta": abs(float(phi(ex.theta))) <= 1e-10,
        "gram_closed_form": bool(np.all(np.abs(gram - closed) <= args.tol)),
        "orthogonality": all(abs(pair[k]) <= args.tol for k in ("P.N1", "P.N2", "N1.N2")),
        "negative_definite": bool(np.max(np.linalg.eigvalsh(gram)) < -1e-9),
        "matches_zariski": rep.theta is not None
        and abs(rep.theta[0] - ex.vartheta) <= 1e-10
        and abs(rep.theta[1] - ex.theta) <= 1e-10,
    }
    out = {
        "a0": args.a0,
        "a1": args.a1,
        "vartheta": ex.vartheta,
        "theta": ex.theta,
        "breakpoints_abs_z": [r1, r2],
        "profiles_at_breakpoints": samples,
        "intersections": pair,
        "gram": gram,
        "gram_closed_form": closed,
        "vol": vol(D),
        "vol_chi": vol_chi(D),
        "checks": checks,
    }
    lines = [
        f"a0 = {args.a0:.6g}, a1 = {args.a1:.6g}",
        f"vartheta = {ex.vartheta:.15f}   theta = {ex.theta:.15f}",
        f"|z| breakpoints: {r1:.12g}, {r2:.12g}",
    ]
    for name, vals in samples.items():
        lines.append(f"  {name:>3}(z) at breakpoints: {vals[0]: .12g}  {vals[1]: .12g}")
    for k, v in pair.items():
        lines.append(f"  deg({k}) = {v: .12g}")
    lines.append(f"Gram matrix: [[{gram[0, 0]:.10g}, {gram[0, 1]:.3g}], [{gram[1, 0]:.3g}, {gram[1, 1]:.10g}]]")
    lines.append(f"closed form: [[{closed[0, 0]:.10g}, 0], [0, {closed[1, 1]:.10g}]]")
    for k, v in checks.items():
        lines.append(f"  check {k}: {'ok' if v else 'FAILED'}")
    stream = sys.stderr if args.json and args.out is None else sys.stdout
    stream.write("\n".join(lines) + "\n")
    if args.json or args.out:
        _emit(out, args.out)
    return EXIT_OK if all(checks.values()) else EXIT_PROPERTY


def _check_divisor(D, tol=1e-6):
    v = verify_main_theorem(D, tol=tol)
    return v.ok, {k: bool(x) for k, x in v.flags.items() if not x}


def _check_degree_zero(D, tol=1e-6):
    h = hodge_check(D)
    ok = h.self_deg <= 1e-9 and (abs(h.self_deg) > 1e-9 or h.residual <= 1e-8)
    v = verify_main_theorem(D, tol=tol)
    return ok and v.ok, {k: bool(x) for k, x in v.flags.items() if not x}


def _check_fiber(args, tol=None):
    seed, i = args
    rng = np.random.default_rng([seed, i])
    r = int(rng.integers(1, 7))
    cfg = random_configuration(rng, r)
    e = rng.normal(size=r) * 2.0
    tot = float(e @ cfg.mult)
    if tot < 0:
        e = e + (-tot + rng.random()) / cfg.mult.sum()
    res = greatest_pi_nef(cfg, VerticalDivisorData(rng.normal(size=r) * 2.0, e))
    ok = res.slack.min() >= -1e-12 and abs(res.n @ res.slack) <= 1e-12 and (res.n / cfg.mult).min() <= 1e-12
    return ok, {}


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ARAKZAR_THREADS", os.cpu_count() or 1)))
    except ValueError:
        return 1


def _run_all(fn, items):
    n = _threads()
    if n <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * n))))


def cmd_verify(args):
    if args.count < 0:
        raise InputError("--count must be nonnegative")
    divs = random_divisors(args.seed, args.count)
    rng = np.random.default_rng(args.seed + 1)
    zero = [random_degree_zero(rng) for _ in range(args.count // 4)]
    summary = {"seed": args.seed, "count": args.count, "tol": args.tol}
    failures = []
    for name, fn, items in (
        ("divisors", _check_divisor, divs),
        ("degree_zero", _check_degree_zero, zero),
        ("fiber_configurations", _check_fiber, [(args.seed, i) for i in range(args.count // 2)]),
    ):
        results = _run_all(partial(fn, tol=args.tol), items)
        bad = [i for i, (ok, _) in enumerate(results) if not ok]
        summary[name] = {"total": len(items), "passed": len(items) - len(bad), "failed": len(bad)}
        failures += [{"family": name, "index": i, "flags": results[i][1]} for i in bad]
    summary["failures"] = failures
    summary["all_passed"] = not failures
    _emit(summary, args.out)
    return EXIT_OK if not failures else EXIT_PROPERTY


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-6, help="equality tolerance (default 1e-6)")
    common.add_argument("--grid-points", type=int, default=4001, help="sampling density of profiles")
    common.add_argument("--window", type=float, default=None, help="half-width of the t window for dumps (default auto)")
    common.add_argument("--out", default=None, help="write JSON here instead of stdout")
    common.add_argument("--csv-dir", default=None, help="directory for CSV sample dumps")

    p = argparse.ArgumentParser(prog="arakzar", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"arakzar {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("analyze", parents=[common], help="full analysis report of a divisor")
    s.add_argument("config")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("volume", parents=[common], help="Okounkov data and volumes")
    s.add_argument("config")
    s.set_defaults(func=cmd_volume)

    s = sub.add_parser("intersect", parents=[common], help="arithmetic intersection number of two divisors")
    s.add_argument("config")
    s.add_argument("config2")
    s.set_defaults(func=cmd_intersect)

    s = sub.add_parser("zariski", parents=[common], help="Zariski decomposition report")
    s.add_argument("config")
    s.set_defaults(func=cmd_zariski)

    s = sub.add_parser("fiber-decompose", parents=[common], help="vertical decomposition on one fiber")
    s.add_argument("config")
    s.set_defaults(func=cmd_fiber)

    s = sub.add_parser("count-sections", parents=[common], help="lattice bounds for small sections")
    s.add_argument("config")
    s.add_argument("--m", type=int, action="append", help="level (repeatable); default sweeps up to --m-max")
    s.add_argument("--m-max", type=int, default=200)
    s.add_argument("--cap", type=int, default=10**6, help="enumerate exactly below this predicted count")
    s.set_defaults(func=cmd_count)

    s = sub.add_parser("reproduce-example", parents=[common], help="the explicit (H0, log(a0 + a1|z|^2)) example")
    s.add_argument("--a0", type=float, default=0.8)
    s.add_argument("--a1", type=float, default=0.8)
    s.add_argument("--json", action="store_true", help="print JSON to stdout (table goes to stderr)")
    s.set_defaults(func=cmd_example)

    s = sub.add_parser("verify", parents=[common], help="seeded randomized property sweep")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=200)
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"arakzar: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except NotIntegrableError as e:
        print(f"arakzar: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (InconsistencyError, PropertyViolation) as e:
        print(f"arakzar: property violation: {e}", file=sys.stderr)
        return EXIT_PROPERTY
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError, gc.DomainError) as e:
        print(f"arakzar: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"arakzar: error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
