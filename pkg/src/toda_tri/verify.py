"""Seeded property suite behind ``toda-tri verify``.

Every criterion draws its instances from ``numpy.random.default_rng`` seeded
with ``(seed, criterion, trial)``, so reports are reproducible bit for bit.
Each criterion is a list of checks; a check records the number of instances,
the worst deviation and the tolerance.  Checks flagged ``informational`` are
reported but do not affect the verdict.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .charts import Chart, ChartPoint, chart_from_operator, operator_from_x_chart
from .errors import ShapeViolation, TodaTriError
from .flows import FlowTag, integrate, invariant_drift
from .frame import (
    FramePair,
    dual_minors,
    extend_frame,
    frame_to_operator,
    operator_to_frame,
)
from .operator import TriangularOperator, random_operator
from .series import hamiltonian_e, hamiltonian_log, minus_series, plus_series
from .spectral import (
    characteristic_curve,
    domega_identity_ratio,
    floquet_roots,
    in_support,
    sample_curve_points,
)
from .symplectic import (
    Hamiltonian,
    fit_constant,
    frame_flow_tangent,
    frame_hamiltonian,
    gradient,
    hamiltonian_value,
    load_calibration,
    match_lax,
    omega1_evaluate,
    snap_constant,
)

DEFAULT_SEED = 42
SHAPES = [(3, 1), (5, 1), (5, 2), (7, 1), (7, 2)]
# bounded sampling range on which both flows stay regular up to t = 1
FLOW_RANGE = {"range": (0.8, 1.2), "sym": 0.3}


def tol_scale():
    return float(os.environ.get("TODA_TRI_TOL_SCALE", "1"))


@dataclass
class Check:
    name: str
    instances: int
    max_deviation: float
    tolerance: float
    informational: bool = False
    note: str = ""

    @property
    def passed(self):
        return bool(self.max_deviation <= self.tolerance)

    def to_dict(self):
        d = asdict(self)
        d["max_deviation"] = float(d["max_deviation"])
        d["pass"] = self.passed
        if not self.note:
            del d["note"]
        return d


def _rng(seed, crit, trial=0):
    return np.random.default_rng([seed, crit, trial])


def _instance(seed, crit, trial, shapes=SHAPES, **kw):
    rng = _rng(seed, crit, trial)
    n, k = shapes[trial % len(shapes)]
    return random_operator(n, k, rng.integers(2**63), **kw)


def _count(default, trials):
    return default if trials is None else min(default, trials)


# 1. curve shape

def crit_curve_shape(seed, trials, ts):
    count = _count(200, trials)
    support = corners = r10 = 0.0
    for t in range(count):
        L = _instance(seed, 1, t)
        try:
            curve = characteristic_curve(L)
        except ShapeViolation as exc:
            support = max(support, abs(exc.value))
            continue
        for (i, j), r in curve.terms.items():
            if (i, j) not in ((L.k + 1, 0), (0, L.n)) and not in_support(L.n, L.k, i, j):
                support = max(support, abs(r))
        corners = max(corners, abs(curve.coefficient(L.k + 1, 0) - 1), abs(curve.coefficient(0, L.n) + 1))
        prod = np.prod(L.a[:, 0])
        r10 = max(r10, abs(curve.coefficient(1, 0) - prod) / abs(prod))
    return [
        Check("monomials outside the support", count, support, 1e-9 * ts),
        Check("corner coefficients w^{k+1}, -E^n", count, corners, 1e-9 * ts),
        Check("r_{1,0} = prod a^(1) (relative)", count, r10, 1e-9 * ts),
    ]


# 2. worked instance

def crit_worked_instance(seed, trials, ts):
    L = TriangularOperator(3, 1, np.ones((3, 1)))
    tol = 1e-10 * ts
    curve = characteristic_curve(L)
    expected = {(2, 0): 1.0, (0, 3): -1.0, (1, 1): 3.0, (1, 0): 1.0}
    keys = set(expected) | set(curve.terms)
    dev_curve = max(abs(curve.coefficient(*key) - expected.get(key, 0.0)) for key in keys)
    roots = floquet_roots(L, curve)
    F = operator_to_frame(L, curve)
    ref = np.array([1.0, -1.0, 1.0]) / math.sqrt(3)
    phi = F.Phi[0] / np.linalg.norm(F.Phi[0])
    dev_frame = min(np.max(np.abs(phi - c * ref)) for c in (phi @ ref / abs(phi @ ref),))
    e = minus_series(L, 3).e
    w1 = plus_series(L, 1).w[0]
    return [
        Check("R = w^2 - E^3 + 3wE + w", 1, float(dev_curve), tol),
        Check("Floquet root -1", 1, float(abs(roots[0] + 1)) if len(roots) == 1 else math.inf, tol),
        Check("frame proportional to (1,-1,1)", 1, float(dev_frame), tol),
        Check("e = (1, 0, 0)", 1, float(np.max(np.abs(e - [1, 0, 0]))), tol),
        Check("w_1 = -3", 1, float(abs(w1 + 3)), tol),
    ]


# 3. lemma residuals

def minus_residual(L, ms):
    """Coefficients of ``z^{k+1-i} (L psi - E psi)_i`` through order ``S``."""
    k, S = L.k, ms.S
    e = np.concatenate([[1.0], ms.e])

    def xi(s, i):
        return 1.0 if s == 0 else ms.xi_at(s, i)

    worst = 0.0
    for i in range(1, L.n + 1):
        for m in range(S + 1):
            val = xi(m, i - k - 1)
            for j in range(1, k + 1):
                if m - k - 1 + j >= 0:
                    val += L.coef(i, j) * xi(m - k - 1 + j, i - j)
            for t in range(m + 1):
                val -= e[t] * xi(m - t, i)
            worst = max(worst, abs(val))
    return worst


def plus_residual(L, ps):
    """Coefficients of ``exp(-phi_i) E^{i-1} (L psi - E psi)_i`` on the stored window."""
    k, n, S = L.k, L.n, ps.S

    def xi(s, i):
        return 1.0 if s == 0 else ps.xi_at(s, i)

    worst = 0.0
    for i in range(-n + k + 1, n + 1):
        for m in range(S + 1):
            val = xi(m, i - 1) - xi(m, i)
            for j in range(2, k + 2):
                if m - j + 1 >= 0:
                    weight = L.coef(i, j) * np.exp(ps.phi_at(i - j) - ps.phi_at(i))
                    val += weight * xi(m - j + 1, i - j)
            worst = max(worst, abs(val))
    return worst


def crit_lemma_residuals(seed, trials, ts):
    count = _count(100, trials)
    rm = rp = ek = 0.0
    for t in range(count):
        L = _instance(seed, 3, t)
        ms = minus_series(L, 6)
        rm = max(rm, minus_residual(L, ms))
        rp = max(rp, plus_residual(L, plus_series(L, 6)))
        ek = max(ek, abs(ms.e[L.k]))
    return [
        Check("minus series residual through order 6", count, rm, 1e-9 * ts),
        Check("plus series residual through order 6", count, rp, 1e-9 * ts),
        Check("e_{k+1} = 0", count, ek, 1e-10 * ts),
    ]


# 4. substitution into the curve

def curve_along_minus(curve, e, orders):
    """``z^{n(k+1)} R(z^{-n}, E(z))`` truncated to ``orders`` coefficients."""
    n, k = curve.n, curve.k
    base = np.concatenate([[1.0], e])[:orders]
    total = np.zeros(orders, dtype=complex)
    for (i, j), r in curve.terms.items():
        shift = n * (k + 1) - n * i - (k + 1) * j
        if shift >= orders:
            continue
        pw = np.array([1.0 + 0j])
        for _ in range(j):
            pw = P.polymul(pw, base)[:orders]
        part = np.zeros(orders, dtype=complex)
        part[shift:] = np.pad(pw, (0, orders))[: orders - shift]
        total += r * part
    return total


def curve_along_plus(curve, w, r10, orders):
    """``E^{-n} R(w(E), E)`` truncated to ``orders`` coefficients."""
    n = curve.n
    base = np.concatenate([[1.0], w])[:orders]
    total = np.zeros(orders, dtype=complex)
    for (i, j), r in curve.terms.items():
        shift = n * i + j - n
        if shift >= orders:
            continue
        pw = np.array([1.0 + 0j])
        for _ in range(i):
            pw = P.polymul(pw, base)[:orders]
        part = np.zeros(orders, dtype=complex)
        part[shift:] = np.pad(pw, (0, orders))[: orders - shift]
        total += r * part / r10**i
    return total


def crit_substitution(seed, trials, ts):
    count = _count(50, trials)
    dm = dp = 0.0
    for t in range(count):
        L = _instance(seed, 4, t)
        curve = characteristic_curve(L)
        scale = 1.0 + sum(abs(r) for r in curve.terms.values())
        dm = max(dm, np.max(np.abs(curve_along_minus(curve, minus_series(L, 6).e, 6))) / scale)
        ps = plus_series(L, 6)
        dp = max(dp, np.max(np.abs(curve_along_plus(curve, ps.w, ps.r10, 6))) / scale)
    return [
        Check("R(z^-n, E(z)) vanishes through 6 orders", count, float(dm), 1e-8 * ts),
        Check("R(w(E), E) vanishes through 6 orders", count, float(dp), 1e-8 * ts),
    ]


# 5. conservation

def crit_conservation(seed, trials, ts):
    count = _count(40, trials)
    worst = {FlowTag.XI: 0.0, FlowTag.ETA: 0.0}
    for t in range(count):
        L = _instance(seed, 5, t, shapes=[(5, 1), (5, 2), (7, 1), (7, 2)], **FLOW_RANGE)
        for flow in worst:
            traj = integrate(L, flow, 1.0, 1e-3, monitor_every=100)
            worst[flow] = max(worst[flow], max(invariant_drift(traj).values()))
    return [
        Check(f"{flow.value}-flow drift of r_ij and e_1..e_6", count, d, 1e-8 * ts)
        for flow, d in worst.items()
    ]


# 6. Hamiltonian matches

def _leaf_operator(seed, trial, n):
    """A k = 1 operator on the leaf e_1 = 0.

    The coefficients sum to ``n e_1 = 0``, so they cannot all be positive;
    only ``|a_i|`` is kept away from zero.
    """
    rng = _rng(seed, 61, trial)
    while True:
        x = rng.normal(scale=0.6, size=n)
        x -= x[-1]
        pt = ChartPoint(Chart.X_K1, n, x, (0.0,))
        try:
            L = operator_from_x_chart(pt)
        except TodaTriError:
            continue
        if np.min(np.abs(L.a)) > 0.05:
            return L


def crit_hamiltonian(seed, trials, ts, calibration=None):
    count = _count(100, trials)
    cal = calibration or load_calibration()
    k1 = [(5, 1), (7, 1)]
    dev = {"hminus": 0.0, "hplus": 0.0, "xcubic": 0.0, "e4": 0.0, "e3": 0.0, "e3-full": 0.0, "leaf": 0.0}
    for t in range(count):
        L = _instance(seed, 6, t, shapes=k1)
        dev["hminus"] = max(dev["hminus"], match_lax("phi-k1", L, "hminus", "xi", cal))
        dev["hplus"] = max(dev["hplus"], match_lax("phi-k1", L, "hplus", "eta", cal))
        dev["xcubic"] = max(dev["xcubic"], match_lax("x-k1", L, "xcubic", "xi", cal))
        dev["e3-full"] = max(dev["e3-full"], match_lax("x-k1", L, "e3-full", "xi", cal))
        pt = chart_from_operator(L, "x-k1")
        dev["e3"] = max(dev["e3"], abs(hamiltonian_value(pt, "e3") - hamiltonian_e(L, 1)))
        L2 = _instance(seed, 62, t, shapes=[(5, 2), (7, 2)])
        dev["e4"] = max(dev["e4"], match_lax("xy-k2", L2, "e4", "xi", cal))
        leaf = _leaf_operator(seed, t, (5, 7)[t % 2])
        dev["leaf"] = max(dev["leaf"], match_lax("x-k1", leaf, "xcubic", "xi", cal))
    tol = 1e-9 * ts
    return [
        Check("phi-k1 hminus vs xi-flow", count, dev["hminus"], tol),
        Check("phi-k1 hplus vs eta-flow", count, dev["hplus"], tol),
        Check("x-k1 xcubic vs xi-flow", count, dev["xcubic"], tol),
        Check("xy-k2 e4 vs xi-flow", count, dev["e4"], 1e-8 * ts),
        Check("e3 chart value = e_3", count, dev["e3"], 1e-10 * ts),
        Check(
            "x-k1 e3-full vs xi-flow", count, dev["e3-full"], tol, informational=True,
            note="cubic average corrected by -e_1 <x_i^2 - x_i x_{i+1}>",
        ),
        Check("x-k1 xcubic vs xi-flow on the leaf e_1 = 0", count, dev["leaf"], tol, informational=True),
    ]


# 7. descendent identity

def crit_descendent(seed, trials, ts, calibration=None):
    count = _count(20, trials)
    rho_star = (calibration or load_calibration())["rho"]
    dev = mod = 0.0
    for t in range(count):
        L = _instance(seed, 7, t)
        curve = characteristic_curve(L)
        for pt in sample_curve_points(L, 20, _rng(seed, 71, t), curve):
            rho = domega_identity_ratio(L, pt, curve)
            dev = max(dev, abs(rho - rho_star))
            mod = max(mod, abs(abs(rho) - 1.0))
    return [
        Check("ratio equals the frozen constant", count * 20, float(dev), 1e-7 * ts),
        Check("|ratio| = 1", count * 20, float(mod), 1e-7 * ts),
    ]


# 8. frame duality

def frame_duality_deviation(F):
    """Worst violation of the pairing relations at every site of one period."""
    k = F.k
    worst = 0.0
    for i in range(1, F.n + 1):
        r = dual_minors(F, i)
        for j in range(2, k + 2):
            target = 1.0 if j == k + 1 else 0.0
            worst = max(worst, abs(r @ extend_frame(F, i - j) - target))
    return worst


def crit_frame(seed, trials, ts, calibration=None):
    count = _count(50, trials)
    cal = calibration or load_calibration()
    rt = dual = scale = perm = omega = 0.0
    for t in range(count):
        L = _instance(seed, 8, t)
        F = operator_to_frame(L)
        back = frame_to_operator(F)
        rt = max(rt, float(np.max(np.abs(back.a - L.a))))
        dual = max(dual, frame_duality_deviation(F))
        rng = _rng(seed, 81, t)
        lam = rng.uniform(0.5, 2.0, F.k) * np.exp(2j * np.pi * rng.uniform(size=F.k))
        scale = max(scale, float(np.max(np.abs(frame_to_operator(F.scaled(lam)).a - back.a))))
        order = rng.permutation(F.k)
        perm = max(perm, float(np.max(np.abs(frame_to_operator(F.permuted(order)).a - back.a))))
        omega = max(omega, _omega1_deviation(F, L, rng, cal["omega1"]))
    return [
        Check("roundtrip L -> frame -> L", count, rt, 1e-8 * ts),
        Check("dual pairing relations", count, dual, 1e-9 * ts),
        Check("column-scaling invariance", count, scale, 1e-10 * ts),
        Check("simultaneous-permutation invariance", count, perm, 1e-10 * ts),
        Check(
            "frame form: omega(X_flow, d) = c dH", count, omega, 1e-6 * ts, informational=True,
            note="finite-difference dH, both flows",
        ),
    ]


def _omega1_deviation(F, L, rng, const, h=1e-6):
    d = rng.normal(size=F.Phi.shape) + 1j * rng.normal(size=F.Phi.shape)
    worst = 0.0
    for flow in FlowTag:
        X = frame_flow_tangent(F, L, flow)
        plus = frame_hamiltonian(FramePair(F.Phi + h * d, F.W), flow)
        minus = frame_hamiltonian(FramePair(F.Phi - h * d, F.W), flow)
        dH = (plus - minus) / (2 * h)
        lhs = omega1_evaluate(F, X, d)
        worst = max(worst, abs(lhs - const * dH) / max(1.0, abs(dH)))
    return worst


# 9. w_1 identity

def crit_w1(seed, trials, ts):
    count = _count(50, trials)
    worst = 0.0
    for t in range(count):
        L = _instance(seed, 9, t)
        a1 = L.a[:, 0]
        a2 = L.a[:, 1] if L.k >= 2 else np.ones(L.n)
        expected = -np.sum(a2 / (a1 * np.roll(a1, 1)))
        worst = max(worst, abs(plus_series(L, 1).w[0] - expected))
    return [Check("w_1 = -sum a^(2) exp(phi_{i-2} - phi_i)", count, float(worst), 1e-9 * ts)]


# 10. gradients

def random_chart_point(which, rng):
    which = Hamiltonian(which)
    n = int(rng.choice([5, 7]))
    chart = which.chart
    if chart is Chart.PHI_K1:
        return ChartPoint(chart, n, rng.normal(scale=0.5, size=n), (rng.normal(scale=0.5),))
    if chart is Chart.X_K1:
        return ChartPoint(chart, n, rng.normal(size=n), (rng.uniform(0.5, 1.5),))
    return ChartPoint(chart, n, rng.normal(size=2 * n), (rng.uniform(0.5, 1.5), rng.normal()))


def fd_gradient(pt, which, h=1e-6):
    out = np.empty(len(pt.coords))
    for m in range(len(pt.coords)):
        step = np.zeros(len(pt.coords))
        step[m] = h
        hi = hamiltonian_value(pt.with_coords(pt.coords + step), which)
        lo = hamiltonian_value(pt.with_coords(pt.coords - step), which)
        out[m] = (hi - lo) / (2 * h)
    return out


def crit_gradients(seed, trials, ts):
    count = _count(100, trials)
    checks = []
    for idx, which in enumerate(["hminus", "hplus", "e3", "e4", "xcubic", "e3-full"]):
        worst = 0.0
        for t in range(count):
            pt = random_chart_point(which, _rng(seed, 100 + idx, t))
            g = gradient(pt, which)
            worst = max(worst, float(np.max(np.abs(g - fd_gradient(pt, which))) / max(1.0, np.max(np.abs(g)))))
        checks.append(Check(f"{which} gradient vs central differences", count, worst, 1e-7 * ts,
                            informational=which == "e3-full"))
    return checks


CRITERIA = [
    (1, "curve shape", crit_curve_shape),
    (2, "worked instance", crit_worked_instance),
    (3, "lemma residuals", crit_lemma_residuals),
    (4, "cross-module substitution", crit_substitution),
    (5, "conservation", crit_conservation),
    (6, "Hamiltonian matches", crit_hamiltonian),
    (7, "descendent identity", crit_descendent),
    (8, "frame duality", crit_frame),
    (9, "w_1 identity", crit_w1),
    (10, "gradient checks", crit_gradients),
]


def run_criterion(cid, seed=DEFAULT_SEED, trials=None):
    for c, name, fn in CRITERIA:
        if c == cid:
            checks = fn(seed, trials, tol_scale())
            return _criterion_report(c, name, checks)
    raise KeyError(cid)


def _criterion_report(cid, name, checks):
    verdict = all(ch.passed for ch in checks if not ch.informational)
    return {"id": cid, "name": name, "pass": verdict, "checks": [ch.to_dict() for ch in checks]}


def run_suite(seed=DEFAULT_SEED, trials=None, only=None):
    """Run every criterion (or those listed in ``only``) and return the report dict."""
    results = []
    for cid, name, fn in CRITERIA:
        if only and cid not in only:
            continue
        try:
            checks = fn(seed, trials, tol_scale())
        except TodaTriError as exc:
            checks = [Check(f"raised {type(exc).__name__}: {exc}", 0, math.inf, 0.0)]
        results.append(_criterion_report(cid, name, checks))
    return {
        "seed": seed,
        "trials": trials,
        "tolScale": tol_scale(),
        "criteria": results,
        "pass": all(r["pass"] for r in results),
    }


def run_calibration(seed=DEFAULT_SEED):
    """Fit and snap every calibration constant on single seeded instances."""
    pairs = {}
    k1 = _instance(seed, 200, 0, shapes=[(5, 1)])
    k2 = _instance(seed, 200, 1, shapes=[(5, 2)])
    leaf = _leaf_operator(seed, 0, 5)
    jobs = [
        ("phi-k1", "hminus", "xi", k1),
        ("phi-k1", "hplus", "eta", k1),
        ("x-k1", "e3", "xi", leaf),
        ("x-k1", "e3-full", "xi", k1),
        ("x-k1", "xcubic", "xi", leaf),
        ("xy-k2", "e4", "xi", k2),
    ]
    fits = {}
    for chart, which, flow, L in jobs:
        c = fit_constant(chart, L, which, flow)
        sigma, scale = snap_constant(c, L.n)
        key = f"{chart}/{which}/{flow}"
        pairs[key] = {"scale": scale, "sigma": sigma}
        fits[key] = c
    L = _instance(seed, 201, 0, shapes=[(5, 2)])
    curve = characteristic_curve(L)
    pt = sample_curve_points(L, 1, _rng(seed, 202), curve)[0]
    rho = complex(domega_identity_ratio(L, pt, curve))
    F = operator_to_frame(L)
    d = _rng(seed, 203).normal(size=F.Phi.shape)
    X = frame_flow_tangent(F, L, "xi")
    h = 1e-6
    dH = (frame_hamiltonian(FramePair(F.Phi + h * d, F.W), "xi")
          - frame_hamiltonian(FramePair(F.Phi - h * d, F.W), "xi")) / (2 * h)
    omega = complex(omega1_evaluate(F, X, d) / dH)
    # t+ Hamiltonian from the log series against the closed form -<a^(2) exp(phi_{i-2} - phi_i)>
    a1, a2 = L.a[:, 0], L.a[:, 1]
    kappa = complex(hamiltonian_log(L, 1, 1, "plus") / -np.mean(a2 / (a1 * np.roll(a1, 1))))
    return {
        "kappa": _snap_unit(kappa),
        "omega1": _snap_unit(omega),
        "pairs": dict(sorted(pairs.items())),
        "rho": _snap_unit(rho),
    }, {
        "fits": fits,
        "rho": [rho.real, rho.imag],
        "kappa": [kappa.real, kappa.imag],
        "omega1": [omega.real, omega.imag],
    }


def _snap_unit(z, tol=1e-6):
    for cand in (1.0, -1.0):
        if abs(z - cand) < tol:
            return cand
    return float(z.real)
