"""Reduced Lax flows on the coefficient space and their integration.

The xi-flow is ``dL/dt = [v + T^{-1}, L]`` with ``v`` fixed by requiring
the ``T^{-k-1}`` coefficient to stay equal to 1.  The eta-flow is
``dL/dt = [c T, L]`` with ``c_i = 1 / a_{i+1}^(1)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidStateError, TodaTriError
from .operator import EPS_MIN, TriangularOperator, validate
from .series import minus_series
from .spectral import characteristic_curve


class FlowTag(enum.Enum):
    XI = "xi"
    ETA = "eta"


def solve_v(L):
    """Mean-zero periodic solution of ``v_i - v_{i-k-1} = a_i^(k) - a_{i-1}^(k)``.

    Returned site-major: ``v[i - 1] = v_i``.
    """
    n, k = L.n, L.k
    ak = L.a[:, k - 1]
    rhs = ak - np.roll(ak, 1)
    # walk residues 0, k+1, 2(k+1), ...; residue 0 is site n
    res = np.zeros(n, dtype=L.a.dtype)
    rhs_res = np.roll(rhs, 1)
    prev = 0
    for _ in range(n - 1):
        cur = (prev + k + 1) % n
        res[cur] = res[prev] + rhs_res[cur]
        prev = cur
    closure = abs(res[prev] + rhs_res[0])
    if closure > 1e-12 * (1.0 + np.max(np.abs(rhs))):
        raise ArithmeticError(f"v-constraint closure {closure:.3e}")
    v = np.roll(res, -1)
    return v - v.mean()


def xi_flow_rhs(L, v=None):
    """``da_i^(j)/dt = a_{i-1}^(j-1) - a_i^(j-1) + a_i^(j) (v_i - v_{i-j})``, ``a^(0) = 0``."""
    if v is None:
        v = solve_v(L)
    a = L.a
    out = np.empty_like(a)
    for j in range(1, L.k + 1):
        aj = a[:, j - 1]
        out[:, j - 1] = aj * (v - np.roll(v, j))
        if j > 1:
            prev = a[:, j - 2]
            out[:, j - 1] += np.roll(prev, 1) - prev
    return out


def eta_flow_rhs(L):
    """``da_i^(j)/dt = c_i a_{i+1}^(j+1) - c_{i-j-1} a_i^(j+1)`` with ``a^(k+1) = 1``."""
    a = L.a
    k = L.k
    c = 1.0 / np.roll(a[:, 0], -1)
    out = np.empty_like(a)
    for j in range(1, k + 1):
        nxt = a[:, j] if j < k else np.ones(L.n, dtype=a.dtype)
        out[:, j - 1] = c * np.roll(nxt, -1) - np.roll(c, j + 1) * nxt
    return out


def flow_rhs(L, flow):
    flow = FlowTag(flow)
    return xi_flow_rhs(L) if flow is FlowTag.XI else eta_flow_rhs(L)


def monitor_values(L, S=6):
    """Spectral invariants tracked along trajectories: every ``r_ij`` and ``e_1..e_S``."""
    curve = characteristic_curve(L)
    out = {f"r_{i}_{j}": float(np.real(r)) for (i, j), r in curve.terms.items()}
    e = minus_series(L, S).e
    for s, val in enumerate(e, start=1):
        out[f"e_{s}"] = float(np.real(val))
    return out


@dataclass
class Trajectory:
    n: int
    k: int
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    monitor_times: list = field(default_factory=list)
    monitors: list = field(default_factory=list)

    def operator(self, idx):
        return TriangularOperator(self.n, self.k, self.states[idx])


def integrate(L0, flow, T, dt, scheme="rk4", monitor_every=1, monitor_order=6):
    """Fixed-step integration of a Lax flow.

    States are recorded at every step; spectral monitors every
    ``monitor_every`` steps and at the final time.

    Raises
    ------
    InvalidStateError
        If some ``|a_i^(1)|`` drops below ``EPS_MIN``.
    """
    if dt <= 0 or T < dt:
        raise ValueError("need dt > 0 and T >= dt")
    if scheme not in ("rk4", "euler"):
        raise ValueError(f"unknown scheme {scheme!r}")
    validate(L0)
    flow = FlowTag(flow)
    n, k = L0.n, L0.k
    steps = int(round(T / dt))

    def f(a):
        return flow_rhs(TriangularOperator(n, k, a), flow)

    traj = Trajectory(n, k)
    a = np.array(L0.a)
    traj.times.append(0.0)
    traj.states.append(a.copy())
    traj.monitor_times.append(0.0)
    traj.monitors.append(monitor_values(L0, monitor_order))
    for step in range(1, steps + 1):
        t_prev = (step - 1) * dt
        try:
            # blow-up is detected below, after the step
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                if scheme == "rk4":
                    k1 = f(a)
                    k2 = f(a + 0.5 * dt * k1)
                    k3 = f(a + 0.5 * dt * k2)
                    k4 = f(a + dt * k3)
                    new = a + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
                else:
                    new = a + dt * f(a)
        except (FloatingPointError, ZeroDivisionError) as exc:
            raise InvalidStateError(str(exc), t_prev) from exc
        if not np.all(np.isfinite(new)) or np.min(np.abs(new[:, 0])) < EPS_MIN:
            raise InvalidStateError(f"a^(1) left the open domain after t = {t_prev:.6g}", t_prev)
        a = new
        t = step * dt
        traj.times.append(t)
        traj.states.append(a.copy())
        if step % monitor_every == 0 or step == steps:
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    mon = monitor_values(TriangularOperator(n, k, a), monitor_order)
                if not all(np.isfinite(list(mon.values()))):
                    raise InvalidStateError(f"non-finite spectral monitors at t = {t:.6g}", t_prev)
            except InvalidStateError:
                raise
            except TodaTriError as exc:
                raise InvalidStateError(f"spectral monitors failed at t = {t:.6g}: {exc}", t_prev) from exc
            traj.monitor_times.append(t)
            traj.monitors.append(mon)
    return traj


def invariant_drift(traj):
    """``max_t |q(t) - q(0)| / (1 + |q(0)|)`` for each monitored quantity."""
    if not traj.monitors:
        raise ValueError("empty trajectory")
    first = traj.monitors[0]
    drift = {}
    for name, q0 in first.items():
        worst = 0.0
        for mon in traj.monitors[1:]:
            worst = max(worst, abs(mon.get(name, 0.0) - q0) / (1.0 + abs(q0)))
        drift[name] = worst
    return drift
