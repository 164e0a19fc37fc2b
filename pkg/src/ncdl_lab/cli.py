"""Batch experiment runner.

Every subcommand writes ``<out>/<command>.csv`` and ``<out>/<command>.json``,
prints one verdict line, and exits 0 only when its tolerances are met.
Exit codes: 0 ok, 1 tolerance missed, 2 bad configuration, 3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from .errors import ConfigError, NcdlError

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


# ------------------------------------------------------------------ output

def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _emit(args, csv_text: str, payload: dict, ok: bool, verdict: str) -> int:
    os.makedirs(args.out, exist_ok=True)
    base = os.path.join(args.out, args.command)
    with open(base + ".csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text)
    payload = dict(payload, ok=bool(ok), verdict=verdict)
    with open(base + ".json", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2, default=_jsonable) + "\n")
    print(f"{'PASS' if ok else 'FAIL'} {args.command}: {verdict}")
    return EXIT_OK if ok else EXIT_TOLERANCE


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _plan(args, steps) -> int:
    print(f"dry-run {args.command}:")
    for s in steps:
        print(f"  - {s}")
    print(f"  outputs: {os.path.join(args.out, args.command)}.csv/.json")
    return EXIT_OK


def _test_function(args):
    from .testfn import TestFunction, canonical_family
    if args.testfn:
        try:
            with open(args.testfn, encoding="utf-8") as fh:
                return TestFunction.from_json(fh.read())
        except OSError as exc:
            raise ConfigError("testfn", str(exc)) from None
    if args.seed < 0:
        raise ConfigError("seed", "must be >= 0")
    return canonical_family(args.seed)


def _monotone(values, inversions_allowed=1) -> bool:
    return sum(1 for a, b in zip(values, values[1:]) if b > a) <= inversions_allowed


# ------------------------------------------------------------- subcommands

def cmd_bessel_check(args) -> int:
    from .special import bessel_j_integral, bessel_j_series
    xs = np.round(np.arange(0.0, args.xmax + 1e-12, args.step), 12)
    if args.dry_run:
        return _plan(args, [f"orders |n| <= {args.nmax}", f"{len(xs)} arguments in [0, {args.xmax}]",
                            f"tolerance {args.tol:g}"])
    rows, worst = [], 0.0
    for n in range(-args.nmax, args.nmax + 1):
        for x in xs:
            a, b = bessel_j_series(n, float(x)), bessel_j_integral(n, float(x))
            d = abs(a - b)
            worst = max(worst, d)
            rows.append((n, float(x), a, b, d))
    ok = worst < args.tol
    return _emit(args, _csv(("n", "x", "series", "integral", "diff"), rows),
                 {"max_diff": worst, "tol": args.tol, "nmax": args.nmax, "xmax": args.xmax},
                 ok, f"max series/integral discrepancy {worst:.3e} (tol {args.tol:g})")


def cmd_oracle_check(args) -> int:
    from .fock import ModeWindow
    from .reps import matrix_generic, matrix_generic_oracle, matrix_limit, matrix_limit_oracle
    if args.kind not in ("generic", "limit"):
        raise ConfigError("kind", "must be generic or limit")
    if args.dry_run:
        what = f"lambda={args.lam}, alpha={args.alpha}" if args.kind == "generic" else f"r={args.r}"
        return _plan(args, [f"{args.kind} matrix vs oracle at {what}", f"J={args.J}", f"tolerance {args.tol:g}"])
    F = _test_function(args)
    if args.kind == "generic":
        w = ModeWindow(args.lam, args.J)
        A, B = matrix_generic(F, args.lam, args.alpha, w), matrix_generic_oracle(F, args.lam, args.alpha, w)
    else:
        w = ModeWindow(None, args.J)
        A, B = matrix_limit(F, args.r, w), matrix_limit_oracle(F, args.r, w)
    idx = w.indices
    rows, worst = [], 0.0
    for p, l in enumerate(idx):
        for q, j in enumerate(idx):
            a, b = complex(A.entries[p, q]), complex(B.entries[p, q])
            worst = max(worst, abs(a - b))
            rows.append((int(l), int(j), a.real, a.imag, b.real, b.imag, abs(a - b)))
    ok = worst <= args.tol
    return _emit(args, _csv(("l", "j", "re", "im", "oracle_re", "oracle_im", "diff"), rows),
                 {"kind": args.kind, "max_diff": worst, "tol": args.tol, "J": args.J},
                 ok, f"{args.kind} max entry difference {worst:.3e} (tol {args.tol:g})")


def _converge(args, spec) -> int:
    from .control import defect_experiment
    if args.dry_run:
        return _plan(args, [f"sequence {json.dumps(spec.to_dict(), sort_keys=True)}",
                            f"J={'auto' if args.J is None else args.J}", f"threads={args.threads or 'env/1'}"])
    F = _test_function(args)
    rep = defect_experiment(F, spec, J=args.J, threads=args.threads)
    d = rep.defects
    viol = sum(r.entry_violations for r in rep.rows)
    checks = {"monotone": _monotone(d), "entry_violations": viol == 0}
    if args.ratio is not None:
        checks["ratio"] = d[-1] < args.ratio * d[0]
    ok = all(checks.values())
    payload = json.loads(rep.to_json())
    payload["checks"] = checks
    return _emit(args, rep.to_csv(), payload, ok,
                 f"defect {d[0]:.3e} -> {d[-1]:.3e} over k={spec.ks[0]}..{spec.ks[-1]}, "
                 f"{viol} entry violations")


def cmd_converge_boundary(args) -> int:
    from .control import SequenceSpec
    spec = SequenceSpec("to_boundary", (args.kmin, args.kmax), sign=args.sign, r=args.r, rate=args.rate,
                        pert=args.pert, p=args.p)
    return _converge(args, spec)


def cmd_converge_characters(args) -> int:
    from .control import MINUS_INF, PLUS_INF, SequenceSpec
    lam_inf = args.lam_inf if args.lam_inf in (PLUS_INF, MINUS_INF) else _int_field("lam_inf", args.lam_inf)
    spec = SequenceSpec("to_characters", (args.kmin, args.kmax), sign=args.sign, lam_inf=lam_inf,
                        rate=args.rate, growth=args.growth, a=args.a, decay=args.decay)
    return _converge(args, spec)


def _int_field(name, value):
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"not an integer: {value!r}") from None


def cmd_tail_check(args) -> int:
    from .control import tail_bound, tail_experiment
    lams = [_int_field("lams", x) for x in str(args.lams).split(",")]
    if args.dry_run:
        a = f"alpha={args.alpha}" if args.alpha is not None else f"alpha=2*{args.omega}/lambda"
        return _plan(args, [f"lambda in {lams}", a, "bound C_F/sqrt(lambda)"])
    if args.decay_M is not None:
        from .testfn import decaying_family
        F = decaying_family(args.decay_M)
    else:
        F = _test_function(args)
    rows = []
    for lam in lams:
        alpha = args.alpha if args.alpha is not None else 2.0 * args.omega / lam
        rows.append((lam, alpha, tail_experiment(F, lam, alpha), tail_bound(F, lam, alpha)))
    tails = [t for _, _, t, _ in rows]
    slope = float("nan")
    if len(lams) >= 2 and all(t > 0 for t in tails):
        slope = float(np.polyfit(np.log(lams), np.log(tails), 1)[0])
    checks = {"bound": all(t <= b for _, _, t, b in rows)}
    if args.slope_tol is not None:
        checks["slope"] = math.isfinite(slope) and abs(slope + 0.5) <= args.slope_tol * 0.5
    ok = all(checks.values())
    return _emit(args, _csv(("lambda", "alpha", "tail", "bound"), rows),
                 {"slope": slope, "checks": checks, "alpha": args.alpha, "omega": args.omega}, ok,
                 f"log-log slope {slope:.3f} (target -0.5)")


def cmd_orbit_classify(args) -> int:
    from .orbits import ALPHA_GRID, R_GRID, classify_limit, describe, load_spec, orbit_limit_oracle
    spec = load_spec(args.spec)
    if args.dry_run:
        return _plan(args, [f"classify {json.dumps(spec.to_dict(), sort_keys=True)}",
                            f"oracle: {'k_max=%d' % args.k_max if args.oracle else 'off'}"])
    L = classify_limit(spec)
    box = args.lam_box
    points = sorted(L.enumerate(spec.n, box, R_GRID, ALPHA_GRID), key=describe)
    payload = {"spec": spec.to_dict(), "limit": L.to_dict(), "lam_box": box}
    ok = True
    if args.oracle:
        oracle = orbit_limit_oracle(spec, k_max=args.k_max, lam_box=box)
        ok = oracle == set(points)
        payload["oracle_agrees"] = ok
    return _emit(args, _csv(("orbit",), [(describe(p),) for p in points]), payload, ok, L.verdict())


def _parse_seeds(text, n):
    seeds = [_int_field("seeds", x) for x in str(text).split(",")]
    if len(seeds) != n:
        raise ConfigError("seeds", f"expected {n} comma-separated seeds")
    return seeds


def cmd_tensor_demo(args) -> int:
    from .control import SequenceSpec, sigma_boundary, window_for
    from .reps import Boundary, Generic, matrix_generic, matrix_limit, spectral_norm
    from .fock import ModeWindow
    from .strata import g1_spectrum, tensor_apply, tensor_control, tensor_stratification
    from .testfn import canonical_family
    seeds = _parse_seeds(args.seeds, 4)
    sA = SequenceSpec("to_boundary", (1, args.kmax), r=args.r_a, rate=50.0, pert=1.0, p=1.0)
    sB = SequenceSpec("to_boundary", (1, args.kmax), r=args.r_b, rate=40.0, pert=1.0, p=1.0)
    if args.dry_run:
        return _plan(args, [f"c = f{seeds[0]} (x) f{seeds[1]} + f{seeds[2]} (x) f{seeds[3]}",
                            f"paired boundary sequences r={args.r_a}, r={args.r_b}", f"k=1..{args.kmax}, J={args.J}"])
    fa = [canonical_family(seeds[0]), canonical_family(seeds[2])]
    fb = [canonical_family(seeds[1]), canonical_family(seeds[3])]
    c = list(zip(fa, fb))
    ks = sorted({1, args.kmax} | set(range(1, args.kmax + 1, max(1, args.kmax // 4))))

    def sup_over(F, spec, r):
        pts = [matrix_generic(F, *spec.lam_alpha(k), window_for(spec.lam_alpha(k)[0], args.J)) for k in ks]
        pts.append(matrix_limit(F, r, ModeWindow(None, args.J)))
        return max(spectral_norm(m) for m in pts)

    supA = {id(F): sup_over(F, sA, args.r_a) for F in fa}
    supB = {id(F): sup_over(F, sB, args.r_b) for F in fb}
    rows, defects, bounded = [], [], True
    for k in ks:
        la, aa = sA.lam_alpha(k)
        lb, ab = sB.lam_alpha(k)
        wa, wb = window_for(la, args.J), window_for(lb, args.J)
        exact = tensor_apply(lambda F: matrix_generic(F, la, aa, wa), lambda F: matrix_generic(F, lb, ab, wb), c)
        tc = tensor_control(lambda F: sigma_boundary(F, args.r_a, k, sA, wa),
                            lambda F: sigma_boundary(F, args.r_b, k, sB, wb),
                            c, lambda F: supA[id(F)], lambda F: supB[id(F)])
        d, nrm = spectral_norm(exact - tc.matrix), tc.norm
        bounded &= nrm <= tc.bound * (1 + 1e-12)
        defects.append(d)
        rows.append((k, la, aa, lb, ab, d, nrm, tc.bound))
    strat = tensor_stratification(g1_spectrum(), g1_spectrum())
    ratio = defects[-1] / defects[0] if defects[0] > 0 else 0.0
    ok = bounded and ratio < args.ratio
    payload = {"seeds": seeds, "ratio": ratio, "bounded": bounded,
               "levels": [[list(x) for x in lvl] for lvl in strat.levels]}
    return _emit(args, _csv(("k", "lambda_a", "alpha_a", "lambda_b", "alpha_b", "defect", "control_norm", "bound"),
                            rows), payload, ok,
                 f"defect ratio k={ks[-1]}/k=1 {ratio:.3f} (tol {args.ratio:g}), control within bound: {bounded}")


def cmd_d1_check(args) -> int:
    from .fock import OperatorMatrix
    from .reps import Boundary
    from .strata import SampledField, build_field, check_D1
    if args.dry_run:
        src = args.field or f"seed {args.seed}"
        return _plan(args, [f"field from {src}, J={args.J}", f"planted jump {args.plant_jump}", "conditions 1-5"])
    if args.field:
        fld = SampledField.load(args.field)
    else:
        fld = build_field(_test_function(args), J=args.J)
    if args.plant_jump:
        line = fld.roles.get("boundary_line", [])
        cut = line[len(line) // 2] if line else 0.0
        for r in line:
            if r > cut:
                m = fld.get(Boundary(r))
                e = m.entries.copy()
                e[len(e) // 2, len(e) // 2] += args.plant_jump
                fld.values[Boundary(r)] = OperatorMatrix(m.window, e, m.side)
    fld.save(os.path.join(args.out, "d1-field"))
    rep = check_D1(fld)
    rows = [(k, v.status, v.measure, v.detail) for k, v in sorted(rep.conditions.items())]
    status = " ".join(f"{k}:{v.status}" for k, v in sorted(rep.conditions.items()))
    return _emit(args, _csv(("condition", "status", "measure", "detail"), rows), {"conditions": rep.to_dict()},
                 rep.passed, status)


# ------------------------------------------------------------------ parser

def _common(p):
    p.add_argument("--out", default="ncdl_out", help="output directory")
    p.add_argument("--config", default=None, help="JSON file of option values")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: NCDL_THREADS or 1)")
    p.add_argument("--dry-run", action="store_true", help="validate and print the plan only")


def _source(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--testfn", default=None, help="test function JSON file (overrides --seed)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ncdl-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bessel-check", help="series vs integral Bessel sweep")
    _common(p)
    p.add_argument("--nmax", type=int, default=30)
    p.add_argument("--xmax", type=float, default=20.0)
    p.add_argument("--step", type=float, default=0.5)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_bessel_check)

    p = sub.add_parser("oracle-check", help="matrix elements vs brute-force quadrature")
    _common(p)
    _source(p)
    p.add_argument("--kind", default="generic")
    p.add_argument("--lam", type=int, default=50)
    p.add_argument("--alpha", type=float, default=0.02)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--J", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_oracle_check)

    for name, func in (("converge-boundary", cmd_converge_boundary), ("converge-characters", cmd_converge_characters)):
        p = sub.add_parser(name, help="defect sequence against the norm control")
        _common(p)
        _source(p)
        p.add_argument("--kmin", type=int, default=1)
        p.add_argument("--kmax", type=int, default=20)
        p.add_argument("--J", type=int, default=None, help="window half-width (default auto sqrt|lambda|)")
        p.add_argument("--sign", type=int, default=1)
        p.add_argument("--ratio", type=float, default=None, help="require defect(kmax) < ratio*defect(kmin)")
        if name == "converge-boundary":
            p.add_argument("--r", type=float, default=1.0)
            p.add_argument("--rate", type=float, default=50.0)
            p.add_argument("--pert", type=float, default=1.0)
            p.add_argument("--p", type=float, default=1.0)
        else:
            p.add_argument("--lam-inf", default="2")
            p.add_argument("--rate", type=float, default=50.0)
            p.add_argument("--growth", type=float, default=1.0)
            p.add_argument("--a", type=float, default=1.0)
            p.add_argument("--decay", type=float, default=2.0)
        p.set_defaults(func=func)

    p = sub.add_parser("tail-check", help="windowed tail norm against C_F/sqrt(lambda)")
    _common(p)
    _source(p)
    p.add_argument("--lams", default="400,1600,6400")
    p.add_argument("--alpha", type=float, default=None, help="fixed alpha (default: alpha = 2*omega/lambda)")
    p.add_argument("--omega", type=float, default=0.5)
    p.add_argument("--decay-M", type=int, default=None, help="use the decaying family with modes up to M")
    p.add_argument("--slope-tol", type=float, default=None, help="relative tolerance on the -1/2 slope")
    p.set_defaults(func=cmd_tail_check)

    p = sub.add_parser("orbit-classify", help="limit set of an orbit sequence")
    _common(p)
    p.add_argument("--spec", default="thm1b", help="builtin name or JSON file")
    p.add_argument("--oracle", action="store_true", help="cross-check with the geometric oracle")
    p.add_argument("--k-max", type=int, default=1000)
    p.add_argument("--lam-box", type=int, default=6)
    p.set_defaults(func=cmd_orbit_classify)

    p = sub.add_parser("tensor-demo", help="Kronecker norm control over paired sequences")
    _common(p)
    p.add_argument("--seeds", default="0,1,2,3", help="a1,b1,a2,b2")
    p.add_argument("--r-a", type=float, default=1.0)
    p.add_argument("--r-b", type=float, default=0.7)
    p.add_argument("--kmax", type=int, default=16)
    p.add_argument("--J", type=int, default=4)
    p.add_argument("--ratio", type=float, default=0.1)
    p.set_defaults(func=cmd_tensor_demo)

    p = sub.add_parser("d1-check", help="operator-field conditions 1-5 on a sampled field")
    _common(p)
    _source(p)
    p.add_argument("--J", type=int, default=5)
    p.add_argument("--field", default=None, help="load a saved field directory instead of sampling")
    p.add_argument("--plant-jump", type=float, default=0.0, help="add a jump on the boundary line")
    p.set_defaults(func=cmd_d1_check)
    return ap


def _apply_config(parser, args):
    """Fill options from the --config JSON; explicit command-line values win."""
    if not args.config:
        return args
    try:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("config", str(exc)) from None
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be an object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    dests = {a.dest: a for a in sub._actions if a.dest not in ("help", "config", "func")}
    for key, value in doc.items():
        dest = key.replace("-", "_")
        if dest not in dests:
            raise ConfigError(key, f"unknown option for {args.command}")
        action = dests[dest]
        if getattr(args, dest) != action.default:
            continue
        if action.type is not None and value is not None:
            try:
                value = action.type(value)
            except (TypeError, ValueError):
                raise ConfigError(key, f"invalid value {value!r}") from None
        setattr(args, dest, value)
    return args


def _validate(args):
    if args.threads is not None and args.threads < 1:
        raise ConfigError("threads", "must be >= 1")
    for name in ("J", "kmax", "kmin", "nmax"):
        v = getattr(args, name, None)
        if v is not None and v < 0:
            raise ConfigError(name, "must be >= 0")
    if getattr(args, "kmin", 1) > getattr(args, "kmax", 1):
        raise ConfigError("kmin", "must not exceed kmax")
    for name in ("tol", "step", "ratio"):
        v = getattr(args, name, None)
        if v is not None and not v > 0:
            raise ConfigError(name, "must be positive")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(parser, args)
        _validate(args)
        return args.func(args)
    except ConfigError as exc:
        _diagnose(args, exc, EXIT_CONFIG, field=exc.field)
        return EXIT_CONFIG
    except NcdlError as exc:
        _diagnose(args, exc, EXIT_NUMERIC)
        return EXIT_NUMERIC


def _diagnose(args, exc, code, field=None):
    diag = {"command": args.command, "error": type(exc).__name__, "message": str(exc), "exit": code}
    if field is not None:
        diag["field"] = field
    print(json.dumps(diag, sort_keys=True), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
