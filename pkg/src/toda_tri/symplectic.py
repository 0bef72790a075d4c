"""Symplectic forms in explicit charts and the Hamiltonian form of the flows.

All chart forms are assembled in the sum convention ``sum_i alpha_i ^ beta_i``
as the skew matrix ``sum_i (alpha_i beta_i^T - beta_i alpha_i^T)``.  The
relative factor between the sum and the period average, and the overall
sign, are absorbed into a frozen calibration constant per
``(chart, hamiltonian, flow)`` triple (see ``calibration.json``).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .charts import Chart, ChartPoint, chart_from_operator, operator_from_phi_chart, pushforward
from .errors import ChartMismatch, InconsistentSystem
from .flows import FlowTag, flow_rhs
from .frame import _columns, _det, _check_minor, extend_frame

KERNEL_TOL = 1e-10
RESIDUAL_TOL = 1e-9


class Hamiltonian(enum.Enum):
    HMINUS = "hminus"
    HPLUS = "hplus"
    E3 = "e3"
    E3_FULL = "e3-full"
    E4 = "e4"
    XCUBIC = "xcubic"

    @property
    def chart(self):
        if self in (Hamiltonian.HMINUS, Hamiltonian.HPLUS):
            return Chart.PHI_K1
        if self is Hamiltonian.E4:
            return Chart.XY_K2
        return Chart.X_K1


@dataclass(frozen=True)
class SymplecticMatrix:
    omega: np.ndarray
    kernel_basis: np.ndarray

    @property
    def rank(self):
        return self.omega.shape[0] - self.kernel_basis.shape[0]


def _unit(size, i):
    v = np.zeros(size)
    v[i] = 1.0
    return v


def _pairs_matrix(size, pairs):
    omega = np.zeros((size, size))
    for alpha, beta in pairs:
        omega += np.outer(alpha, beta) - np.outer(beta, alpha)
    return omega


def _kernel(omega, tol=KERNEL_TOL):
    _, s, Vh = np.linalg.svd(omega)
    cut = tol * max(1.0, s[0])
    return Vh[s <= cut].copy()


def symplectic_matrix(chart, n, params=(), base=None):
    """Skew matrix of the chart form, with a numerical kernel basis.

    ``phi-k1``: ``sum dphi_i ^ dphi_{i+1}``.
    ``x-k1``: ``sum dx_i ^ dx_{i-1}``.
    ``xy-k2``: ``sum dy_i ^ (dx_{i-1} - dx_{i+2}) + d(x_{i-1} x_{i-2}) ^ dx_i
    + e_1 dx_i ^ dx_{i-1}``; needs the base point ``x`` (or a ChartPoint).
    Coordinates are ordered site 1..n (and ``x`` before ``y``).
    """
    chart = Chart(chart)
    if n < 3:
        raise ValueError("need n >= 3")
    if chart is Chart.PHI_K1:
        omega = _pairs_matrix(n, [(_unit(n, i), _unit(n, (i + 1) % n)) for i in range(n)])
    elif chart is Chart.X_K1:
        omega = _pairs_matrix(n, [(_unit(n, i), _unit(n, (i - 1) % n)) for i in range(n)])
    else:
        if isinstance(base, ChartPoint):
            x = base.x
            params = base.params if not params else params
        else:
            if base is None:
                raise ValueError("xy-k2 form needs the base point")
            x = np.asarray(base, dtype=float)[:n]
        e1 = params[0]
        X = lambda i: _unit(2 * n, i % n)  # noqa: E731
        Y = lambda i: _unit(2 * n, n + i % n)  # noqa: E731
        pairs = []
        for i in range(n):
            pairs.append((Y(i), X(i - 1) - X(i + 2)))
            pairs.append((x[(i - 2) % n] * X(i - 1) + x[(i - 1) % n] * X(i - 2), X(i)))
            pairs.append((e1 * X(i), X(i - 1)))
        omega = _pairs_matrix(2 * n, pairs)
    return SymplecticMatrix(omega, _kernel(omega))


# Polynomial Hamiltonians as sums over i of coef * prod var_{i+shift}.
# Each monomial is (coef, ((var, shift), ...)); var is "x" or "y".

def _poly_value(terms, fields):
    total = 0.0
    for coef, factors in terms:
        prod = np.ones_like(fields["x"])
        for var, s in factors:
            prod = prod * np.roll(fields[var], -s)
        total += coef * prod.sum()
    return total


def _poly_gradient(terms, fields):
    grad = {var: np.zeros_like(val) for var, val in fields.items()}
    for coef, factors in terms:
        for f, (var, s) in enumerate(factors):
            prod = np.full_like(fields["x"], coef)
            for g, (var_g, s_g) in enumerate(factors):
                if g != f:
                    prod = prod * np.roll(fields[var_g], -(s_g - s))
            grad[var] += prod
    return grad


_CUBIC = [
    (1.0, (("x", 0), ("x", 0), ("x", -1))),
    (-1.0, (("x", 0), ("x", 0), ("x", 1))),
]


def _x_terms(which, params, n):
    if which is Hamiltonian.XCUBIC:
        return _CUBIC
    terms = [(c / n, f) for c, f in _CUBIC]
    if which is Hamiltonian.E3_FULL:
        (e1,) = params
        terms += [(-e1 / n, (("x", 0), ("x", 0))), (e1 / n, (("x", 0), ("x", 1)))]
    return terms


def _e4_terms(params, n):
    e1, e2 = params
    raw = [
        (1.0, (("y", -1), ("y", 0))),
        (-1.0, (("y", -1), ("y", -3))),
        (1.0, (("x", 0), ("x", -1), ("x", -2), ("x", -1))),
        (-1.0, (("x", 0), ("x", -1), ("x", -2), ("x", 0))),
        (e1, (("x", 0), ("x", 0), ("x", -1))),
        (-e1, (("x", 0), ("x", 0), ("x", 1))),
        (e2, (("x", -1), ("x", 0))),
        (-e2, (("x", -1), ("x", -1))),
        (1.0, (("y", 0), ("x", 2), ("x", 2))),
        (-1.0, (("y", 0), ("x", -1), ("x", -1))),
        (-1.0, (("y", 0), ("x", 2), ("x", 1))),
        (1.0, (("y", 0), ("x", -2), ("x", -1))),
    ]
    return [(c / n, f) for c, f in raw]


def _check_chart(pt, which):
    which = Hamiltonian(which)
    if pt.chart is not which.chart:
        raise ChartMismatch(f"{which.value} lives in {which.chart.value}, not {pt.chart.value}")
    return which


def _fields(pt):
    if pt.chart is Chart.XY_K2:
        return {"x": np.array(pt.x), "y": np.array(pt.y)}
    return {"x": np.array(pt.coords)}


def hamiltonian_value(pt, which):
    """Value of a Hamiltonian at a chart point.

    ``hminus = sum exp(phi_i - phi_{i-1})``, ``hplus = sum exp(phi_{i-2} - phi_i)``,
    ``xcubic = sum x_i^2 (x_{i-1} - x_{i+1})``, ``e3`` its period average,
    ``e3-full = e3 - e_1 <x_i^2 - x_i x_{i+1}>`` and ``e4`` the five-term
    average in the ``xy-k2`` chart.
    """
    which = _check_chart(pt, which)
    if which is Hamiltonian.HMINUS:
        return float(operator_from_phi_chart(pt).a[:, 0].sum())
    if which is Hamiltonian.HPLUS:
        a = operator_from_phi_chart(pt).a[:, 0]
        return float(np.sum(1.0 / (a * np.roll(a, 1))))
    if which is Hamiltonian.E4:
        return float(_poly_value(_e4_terms(pt.params, pt.n), _fields(pt)))
    return float(_poly_value(_x_terms(which, pt.params, pt.n), _fields(pt)))


def gradient(pt, which):
    """Closed-form gradient with respect to the chart coordinates (leaf parameters fixed)."""
    which = _check_chart(pt, which)
    if which is Hamiltonian.HMINUS:
        a = operator_from_phi_chart(pt).a[:, 0]
        return a - np.roll(a, -1)
    if which is Hamiltonian.HPLUS:
        a = operator_from_phi_chart(pt).a[:, 0]
        b = 1.0 / (a * np.roll(a, 1))
        return np.roll(b, -2) - b
    if which is Hamiltonian.E4:
        g = _poly_gradient(_e4_terms(pt.params, pt.n), _fields(pt))
        return np.concatenate([g["x"], g["y"]])
    return _poly_gradient(_x_terms(which, pt.params, pt.n), _fields(pt))["x"]


def hamiltonian_vector_field(pt, which, sigma=1.0, tol=RESIDUAL_TOL):
    """Least-norm ``v`` with ``omega v = sigma grad H``; returns ``(v, residual)``.

    Raises
    ------
    InconsistentSystem
        If the gradient is not in the range of ``omega``.
    """
    which = _check_chart(pt, which)
    sm = symplectic_matrix(pt.chart, pt.n, pt.params, base=pt)
    g = sigma * gradient(pt, which)
    v = np.linalg.lstsq(sm.omega, g, rcond=None)[0]
    residual = float(np.max(np.abs(sm.omega @ v - g))) if g.size else 0.0
    if residual > tol * max(1.0, float(np.max(np.abs(g)))):
        raise InconsistentSystem(f"residual {residual:.3e}: gradient not in range of the form")
    return v, residual


_SCALES = {"1": lambda n: 1.0, "n": lambda n: float(n), "1/n": lambda n: 1.0 / n}


def scale_value(scale, n):
    return _SCALES[scale](n)


def calibration_key(chart, which, flow):
    return f"{Chart(chart).value}/{Hamiltonian(which).value}/{FlowTag(flow).value}"


def load_calibration():
    text = resources.files("toda_tri").joinpath("calibration.json").read_text()
    return json.loads(text)


def calibration_entry(chart, which, flow, calibration=None):
    calibration = calibration or load_calibration()
    key = calibration_key(chart, which, flow)
    try:
        return calibration["pairs"][key]
    except KeyError:
        raise ChartMismatch(f"no frozen calibration for {key}") from None


def field_velocities(chart, L, which):
    """Unscaled Hamiltonian field pushed to coefficient velocities, shape ``(n, k)``."""
    pt = chart_from_operator(L, chart)
    v, _ = hamiltonian_vector_field(pt, which)
    return pushforward(pt, v)


def match_lax(chart, L, which, flow, calibration=None):
    """``max |c * pushforward(X_H) - lax_rhs|`` with the frozen constant ``c = sigma * scale``."""
    entry = calibration_entry(chart, which, flow, calibration)
    c = entry["sigma"] * scale_value(entry["scale"], L.n)
    u = field_velocities(chart, L, which)
    return float(np.max(np.abs(c * u - flow_rhs(L, flow))))


def fit_constant(chart, L, which, flow):
    """Least-squares ``c`` in ``c * pushforward(X_H) = lax_rhs`` (used for calibration)."""
    u = field_velocities(chart, L, which).ravel()
    lax = flow_rhs(L, flow).ravel()
    return float(np.real(np.vdot(u, lax) / np.vdot(u, u)))


def snap_constant(c, n):
    """Nearest ``(sigma, scale)`` with ``scale`` in ``{1, n, 1/n}``."""
    best = None
    for scale in _SCALES:
        for sigma in (1, -1):
            err = abs(c - sigma * scale_value(scale, n))
            if best is None or err < best[0]:
                best = (err, sigma, scale)
    return best[1], best[2]


# the form on frame coordinates

def _frame_tangent_data(F, i, dPhi):
    """Derivatives at site ``i`` induced by a frame tangent ``dPhi``.

    Returns ``(dvarphi_i, da_i)`` where ``varphi_i = -log((-1)^{ik} D_i)``
    and ``a_i^(j) = -N_ij / D_i``.
    """
    k = F.k
    base = [i - c for c in range(1, k + 1)]
    cols = _columns(F, base)
    dcols = _columns(F, base, dPhi)
    D = _det(cols)
    _check_minor(D, cols, i)
    dD = _det_derivative(cols, dcols)
    target = extend_frame(F, i - k - 1)
    dtarget = extend_frame(F, i - k - 1, dPhi)
    da = np.empty(k, dtype=complex)
    for j in range(k):
        num, dnum = cols.copy(), dcols.copy()
        num[:, j], dnum[:, j] = target, dtarget
        N = _det(num)
        dN = _det_derivative(num, dnum)
        da[j] = -(dN * D - N * dD) / D**2
    return -dD / D, da


def _det_derivative(cols, dcols):
    total = 0j
    for c in range(cols.shape[1]):
        m = cols.copy()
        m[:, c] = dcols[:, c]
        total += _det(m)
    return total


def omega1_evaluate(F, d1, d2):
    """The form on frames with ``W`` fixed, evaluated on two tangents.

    ``1/2 < dvarphi_{i-1} ^ dvarphi_i - (-1)^{(i-1)k} exp(varphi_{i-1})
    sum_j da_i^(j) ^ |phi_{i-2}, ..., phi_{i-k}, dphi_{i-j}| >``, where all
    variations are induced from the tangents by differentiating the
    determinant formulas.  Uses ``(-1)^{(i-1)k} exp(varphi_{i-1}) = 1 / D_{i-1}``.
    """
    d1 = np.asarray(d1, dtype=complex)
    d2 = np.asarray(d2, dtype=complex)
    n, k = F.n, F.k
    data1 = {i: _frame_tangent_data(F, i, d1) for i in range(0, n + 1)}
    data2 = {i: _frame_tangent_data(F, i, d2) for i in range(0, n + 1)}
    total = 0j
    for i in range(1, n + 1):
        p1, a1 = data1[i]
        p2, a2 = data2[i]
        q1, _ = data1[i - 1]
        q2, _ = data2[i - 1]
        total += q1 * p2 - q2 * p1
        prev = _columns(F, [i - 1 - c for c in range(1, k + 1)])
        Dprev = _det(prev)
        fixed = _columns(F, [i - c for c in range(2, k + 1)]) if k > 1 else np.zeros((k, 0), complex)
        for j in range(1, k + 1):
            g1 = _det(np.column_stack([fixed, extend_frame(F, i - j, d1)]))
            g2 = _det(np.column_stack([fixed, extend_frame(F, i - j, d2)]))
            total -= (a1[j - 1] * g2 - a2[j - 1] * g1) / Dprev
    return 0.5 * total / n


def frame_hamiltonian(F, flow):
    """``<a_i^(k)>`` for the xi-flow, ``-<a_i^(2) exp(varphi_{i-2} - varphi_i)>`` for eta."""
    from .frame import frame_to_operator

    L = frame_to_operator(F)
    a = L.a.astype(complex)
    if FlowTag(flow) is FlowTag.XI:
        return complex(np.mean(a[:, L.k - 1]))
    a2 = a[:, 1] if L.k >= 2 else np.ones(L.n)
    return complex(-np.mean(a2 / (a[:, 0] * np.roll(a[:, 0], 1))))


def frame_flow_tangent(F, L, flow):
    """Frame velocity ``M phi`` of a Lax flow ``dL/dt = [M, L]`` (``W`` is preserved).

    ``M = v + T^{-1}`` for the xi-flow and ``c T`` for the eta-flow.
    """
    from .flows import solve_v

    n = F.n
    ext = lambda i: extend_frame(F, i)  # noqa: E731
    if FlowTag(flow) is FlowTag.XI:
        v = solve_v(L)
        cols = [v[i - 1] * ext(i) + ext(i - 1) for i in range(1, n + 1)]
    else:
        c = 1.0 / np.roll(L.a[:, 0], -1)
        cols = [c[i - 1] * ext(i + 1) for i in range(1, n + 1)]
    return np.stack(cols, axis=1)
