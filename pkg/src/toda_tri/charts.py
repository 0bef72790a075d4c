"""Explicit coordinate charts on the space of operators.

``phi-k1``
    ``a_i = exp(phi_i - phi_{i-1})`` with ``phi_{i-n} = phi_i - log r_{1,0}``.
``x-k1``
    ``a_i = x_i - x_{i-2} + e_1`` where ``x = xi_1^-``.
``xy-k2``
    ``a_i^(2) = x_i - x_{i-3} + e_1`` and
    ``a_i^(1) = y_i - y_{i-3} - (x_i - x_{i-3}) x_{i-2} + e_1 (x_i - x_{i-2}) + e_2``
    where ``x = xi_1^-`` and ``y = xi_2^-``.

Chart coordinates are stored site-major (index ``i - 1`` holds site ``i``)
and are periodic, except ``phi`` whose wrap is carried by the leaf parameter
``log r_{1,0}``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ChartMismatch, LeadingCoefficientZero, UnsupportedK
from .operator import EPS_MIN, TriangularOperator, validate
from .series import log_leading, minus_series


class Chart(enum.Enum):
    PHI_K1 = "phi-k1"
    X_K1 = "x-k1"
    XY_K2 = "xy-k2"

    @property
    def k(self):
        return 2 if self is Chart.XY_K2 else 1


@dataclass(frozen=True)
class ChartPoint:
    """A point in one of the charts.

    ``coords`` is ``phi`` (length n), ``x`` (length n) or ``x`` followed by
    ``y`` (length 2n).  ``params`` holds the leaf constants:
    ``(log r_{1,0},)``, ``(e_1,)`` or ``(e_1, e_2)``.
    """

    chart: Chart
    n: int
    coords: np.ndarray
    params: tuple

    def __post_init__(self):
        object.__setattr__(self, "chart", Chart(self.chart))
        coords = np.array(self.coords, dtype=float)
        expected = 2 * self.n if self.chart is Chart.XY_K2 else self.n
        if coords.shape != (expected,):
            raise ChartMismatch(f"{self.chart.value} needs {expected} coordinates, got {coords.shape}")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    @property
    def x(self):
        return self.coords[: self.n]

    @property
    def y(self):
        if self.chart is not Chart.XY_K2:
            raise ChartMismatch("only xy-k2 carries y")
        return self.coords[self.n :]

    def with_coords(self, coords):
        return ChartPoint(self.chart, self.n, coords, self.params)


def _shift(x, j):
    """Site-major periodic shift: ``out[i - 1] = x_{i-j}``."""
    return np.roll(x, j)


def x_chart_from_operator(L):
    """``(x, e_1)`` for ``k = 1`` or ``(x, y, e_1, e_2)`` for ``k = 2``, anchored at site 0."""
    validate(L)
    if L.k == 1:
        ms = minus_series(L, 1)
        return ChartPoint(Chart.X_K1, L.n, ms.xi_sites()[0].real, (ms.e[0].real,))
    if L.k == 2:
        ms = minus_series(L, 2)
        xs = ms.xi_sites().real
        return ChartPoint(Chart.XY_K2, L.n, np.concatenate([xs[0], xs[1]]), tuple(ms.e[:2].real))
    raise UnsupportedK(f"x charts exist for k = 1, 2 only (got k = {L.k})")


def operator_from_x_chart(pt):
    pt = _require(pt, Chart.X_K1, Chart.XY_K2)
    x = pt.x
    if pt.chart is Chart.X_K1:
        (e1,) = pt.params
        a = (x - _shift(x, 2) + e1)[:, None]
    else:
        e1, e2 = pt.params
        y = pt.y
        a2 = x - _shift(x, 3) + e1
        a1 = y - _shift(y, 3) - (x - _shift(x, 3)) * _shift(x, 2) + e1 * (x - _shift(x, 2)) + e2
        a = np.stack([a1, a2], axis=1)
    for i in range(pt.n):
        if abs(a[i, 0]) < EPS_MIN:
            raise LeadingCoefficientZero(i + 1)
    return TriangularOperator(pt.n, pt.chart.k, a)


def reanchor(pt):
    """Shift ``x`` (and ``y``) so that the site-0 value is zero.

    For ``xy-k2`` this uses the gauge ``x -> x + h1, y -> y + h1 x + h2``
    which leaves the operator unchanged.
    """
    if pt.chart is Chart.X_K1:
        return pt.with_coords(pt.x - pt.x[-1])
    if pt.chart is Chart.XY_K2:
        h1 = -pt.x[-1]
        x = pt.x + h1
        y = pt.y + h1 * pt.x
        y = y - y[-1]
        return pt.with_coords(np.concatenate([x, y]))
    raise ChartMismatch("re-anchoring applies to x charts")


def phi_chart_from_operator(L):
    validate(L)
    if L.k != 1:
        raise UnsupportedK("the phi chart is used for k = 1")
    la = log_leading(L)
    return ChartPoint(Chart.PHI_K1, L.n, np.cumsum(la), (float(la.sum()),))


def operator_from_phi_chart(pt):
    pt = _require(pt, Chart.PHI_K1)
    (lam,) = pt.params
    phi = pt.coords
    prev = _shift(phi, 1)
    prev[0] -= lam
    return TriangularOperator(pt.n, 1, np.exp(phi - prev)[:, None])


def chart_from_operator(L, chart):
    chart = Chart(chart)
    if chart is Chart.PHI_K1:
        return phi_chart_from_operator(L)
    pt = x_chart_from_operator(L)
    if pt.chart is not chart:
        raise ChartMismatch(f"operator with k = {L.k} does not live in {chart.value}")
    return pt


def operator_from_chart(pt):
    if pt.chart is Chart.PHI_K1:
        return operator_from_phi_chart(pt)
    return operator_from_x_chart(pt)


def pushforward(pt, v):
    """Push a chart tangent vector ``v`` to coefficient velocities (shape ``(n, k)``).

    Leaf parameters are held fixed.
    """
    v = np.asarray(v)
    if pt.chart is Chart.PHI_K1:
        a = operator_from_phi_chart(pt).a[:, 0]
        return (a * (v - _shift(v, 1)))[:, None]
    if pt.chart is Chart.X_K1:
        return (v - _shift(v, 2))[:, None]
    n = pt.n
    e1, _ = pt.params
    x, vx, vy = pt.x, v[:n], v[n:]
    da2 = vx - _shift(vx, 3)
    da1 = (
        vy
        - _shift(vy, 3)
        - (vx - _shift(vx, 3)) * _shift(x, 2)
        - (x - _shift(x, 3)) * _shift(vx, 2)
        + e1 * (vx - _shift(vx, 2))
    )
    return np.stack([da1, da2], axis=1)


def _require(pt, *charts):
    if pt.chart not in charts:
        names = ", ".join(c.value for c in charts)
        raise ChartMismatch(f"expected a point in {names}, got {pt.chart.value}")
    return pt
