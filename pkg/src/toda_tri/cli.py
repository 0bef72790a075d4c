"""Command line front end.

Exit codes: 0 success, 1 verification failure, 2 parse/usage error,
3 shape violation, 4 domain error, 5 integration left the open domain.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ParseError, TodaTriError
from .flows import integrate, invariant_drift
from .frame import FramePair, frame_to_operator, operator_to_frame, positive_scaling
from .operator import TriangularOperator, validate
from .series import minus_series, plus_series
from .spectral import characteristic_curve, floquet_roots, in_support
from .symplectic import calibration_entry, match_lax
from . import verify as suite


def _cplx(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _real_or_cplx(z):
    z = complex(z)
    return z.real if z.imag == 0 else _cplx(z)


def _dump(obj, out=None):
    text = json.dumps(obj, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc


def load_operator(path):
    data = _load_json(path)
    if not isinstance(data, dict):
        raise ParseError(f"{path}: expected an operator object")
    L = TriangularOperator.from_dict(data)
    validate(L)
    return L


def cmd_spectral(args):
    L = load_operator(args.operator)
    curve = characteristic_curve(L)
    prod = np.prod(L.a[:, 0])
    r10 = curve.coefficient(1, 0)
    outside = [
        [i, j] for (i, j) in curve.terms
        if (i, j) not in ((L.k + 1, 0), (0, L.n)) and not in_support(L.n, L.k, i, j)
    ]
    report = {
        "curve": curve.to_dict(),
        "shape": {
            "outsideSupport": outside,
            "r10": _real_or_cplx(r10),
            "prodA1": _real_or_cplx(prod),
            "r10RelativeError": float(abs(r10 - prod) / abs(prod)),
        },
        "floquetRoots": [_cplx(w) for w in floquet_roots(L, curve)],
    }
    _dump(report, args.out)
    return 0


def cmd_series(args):
    L = load_operator(args.operator)
    S = args.order
    ms = minus_series(L, S)
    ps = plus_series(L, S)
    # xiMinus rows are orders, columns sites 1..n; phi and xiPlus cover sites -n..n
    report = {
        "order": S,
        "e": [_real_or_cplx(v) for v in ms.e],
        "xiMinus": [[_real_or_cplx(v) for v in row] for row in ms.xi_sites()],
        "phi": [_real_or_cplx(v) for v in ps.phi],
        "xiPlus": [[_real_or_cplx(v) for v in row] for row in ps.xi_plus],
        "w": [_real_or_cplx(v) for v in ps.w],
        "r10": _real_or_cplx(ps.r10),
        "residuals": {
            "minus": float(suite.minus_residual(L, ms)),
            "plus": float(suite.plus_residual(L, ps)),
        },
        "eK1": _real_or_cplx(ms.e[L.k]) if S > L.k else None,
    }
    _dump(report, args.out)
    return 0


def cmd_flow(args):
    L = load_operator(args.operator)
    traj = integrate(L, args.flow, args.t, args.dt, args.scheme, monitor_every=args.monitor_every)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = [f"a_{i}_{j}" for i in range(1, L.n + 1) for j in range(1, L.k + 1)]
    with open(out / "trajectory.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + names)
        for t, a in zip(traj.times, traj.states):
            w.writerow([repr(float(t))] + [repr(float(np.real(v))) for v in np.ravel(a)])
    with open(out / "monitors.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "quantity", "value"])
        for t, mon in zip(traj.monitor_times, traj.monitors):
            for key, value in mon.items():
                w.writerow([repr(float(t)), key, repr(value)])
    drift = invariant_drift(traj)
    summary = {"flow": args.flow, "T": args.t, "dt": args.dt, "scheme": args.scheme,
               "maxDrift": max(drift.values()), "drift": drift}
    _dump(summary, out / "drift.json")
    _dump(summary)
    return 0


def cmd_frame(args):
    if args.direction == "to-op":
        data = _load_json(args.file)
        if not isinstance(data, dict):
            raise ParseError(f"{args.file}: expected a frame object")
        L = frame_to_operator(FramePair.from_dict(data))
        _dump(L.to_dict(), args.out)
        return 0
    L = load_operator(args.file)
    F = operator_to_frame(L)
    report = F.to_dict()
    if args.positive:
        G, ok = positive_scaling(F)
        if ok:
            report = G.to_dict()
        report["positiveScaling"] = ok
    _dump(report, args.out)
    return 0


def cmd_check(args):
    L = load_operator(args.operator)
    entry = calibration_entry(args.chart, args.which, args.flow)
    dev = match_lax(args.chart, L, args.which, args.flow)
    _dump({
        "chart": args.chart,
        "hamiltonian": args.which,
        "flow": args.flow,
        "sigma": entry["sigma"],
        "scale": entry["scale"],
        "maxDeviation": dev,
    }, args.out)
    return 0


def cmd_verify(args):
    if args.calibrate:
        constants, fits = suite.run_calibration(args.seed)
        target = Path(args.calibration_file or Path(__file__).with_name("calibration.json"))
        _dump(constants, target)
        _dump({"written": str(target), "constants": constants, "raw": fits})
        return 0
    report = suite.run_suite(args.seed, args.trials, args.only)
    _dump(report, args.out)
    return 0 if report["pass"] else 1


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="toda-tri", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectral", help="spectral curve and Floquet roots")
    p.add_argument("operator")
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("series", help="expansions at both marked points")
    p.add_argument("operator")
    p.add_argument("--order", type=_positive_int, default=6)
    p.add_argument("--out")
    p.set_defaults(func=cmd_series)

    p = sub.add_parser("flow", help="integrate a Lax flow")
    p.add_argument("operator")
    p.add_argument("--flow", choices=["xi", "eta"], required=True)
    p.add_argument("--t", type=_positive_float, default=1.0)
    p.add_argument("--dt", type=_positive_float, default=1e-3)
    p.add_argument("--scheme", choices=["rk4", "euler"], default="rk4")
    p.add_argument("--monitor-every", type=_positive_int, default=100)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("frame", help="convert between operators and frames")
    p.add_argument("direction", choices=["to-op", "from-op"])
    p.add_argument("file")
    p.add_argument("--positive", action="store_true",
                   help="rescale so that every exp(-phi_i) is real positive when possible")
    p.add_argument("--out")
    p.set_defaults(func=cmd_frame)

    p = sub.add_parser("check", help="Hamiltonian form of a flow")
    p.add_argument("what", choices=["hamiltonian"])
    p.add_argument("operator")
    p.add_argument("--chart", choices=["phi-k1", "x-k1", "xy-k2"], required=True)
    p.add_argument("--which", choices=["hminus", "hplus", "e3", "e3-full", "e4", "xcubic"], required=True)
    p.add_argument("--flow", choices=["xi", "eta"], required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("verify", help="run the property suite")
    p.add_argument("--seed", type=int, default=suite.DEFAULT_SEED)
    p.add_argument("--trials", type=_positive_int)
    p.add_argument("--only", type=int, nargs="+", metavar="ID")
    p.add_argument("--calibrate", action="store_true", help="refit and write the calibration constants")
    p.add_argument("--calibration-file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TodaTriError as exc:
        print(f"toda-tri: {type(exc).__name__}: {exc}", file=sys.stderr)
        if getattr(exc, "last_time", None) is not None:
            print(f"toda-tri: last good time {exc.last_time!r}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, ArithmeticError) as exc:
        print(f"toda-tri: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
