"""Formal Bloch solutions at the two marked points of the spectral curve.

Near ``p-`` (``w = z^{-n}``)::

    psi_i = z^i (1 + sum_s xi_s^-(i) z^s),   E = z^{-k-1} (1 + sum_s e_s z^s)

Near ``p+`` (``E`` itself is the local parameter)::

    psi_i = exp(phi_i) E^{-i} (1 + sum_s xi_s^+(i) E^s),
    w(E)  = E^n / r_{1,0} (1 + sum_s w_s E^s)

Both expansions are solved order by order.  At each order the unknown
coefficient satisfies a first order difference equation whose right hand
side is assembled from lower orders.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveLeading, OrderUnavailable
from .operator import validate

DEFAULT_ORDER = 6
CLOSURE_TOL = 1e-10


@dataclass(frozen=True)
class MinusSeries:
    """Expansion at ``p-``.

    Attributes
    ----------
    e : numpy.ndarray
        ``e[s - 1] = e_s`` for ``s = 1..S``.
    xi : numpy.ndarray
        Shape ``(S, n)``; ``xi[s - 1, i % n] = xi_s^-(i)``, so column 0 is
        site 0 (= site n) and is identically zero.
    closure : float
        Largest cycle-closure mismatch met while solving.
    """

    S: int
    e: np.ndarray
    xi: np.ndarray
    closure: float

    def xi_at(self, s, i):
        return self.xi[s - 1, i % self.xi.shape[1]]

    def xi_sites(self):
        """``xi`` reordered by site 1..n (the last column is site n)."""
        return np.roll(self.xi, -1, axis=1)


def _cycle_solve(rhs, step):
    """Periodic solution of ``x(i) - x(i - step) = rhs(i)`` with ``x(0) = 0``.

    ``rhs`` is residue indexed and must sum to zero; returns the solution and
    the closure mismatch after walking the full cycle.
    """
    n = len(rhs)
    x = np.zeros(n, dtype=rhs.dtype)
    prev = 0
    for _ in range(n - 1):
        cur = (prev + step) % n
        x[cur] = x[prev] + rhs[cur]
        prev = cur
    closure = abs(x[prev] + rhs[(prev + step) % n])
    return x, closure


def minus_series(L, S=DEFAULT_ORDER):
    """Solve ``L psi = E psi`` at ``p-`` through order ``S``."""
    validate(L)
    if S < 1:
        raise ValueError("order must be at least 1")
    n, k = L.n, L.k
    dtype = L.a.dtype
    bands = [None] + [L.band(j) for j in range(1, k + 1)]
    xi = np.zeros((S + 1, n), dtype=dtype)
    xi[0] = 1.0
    e = np.zeros(S + 1, dtype=dtype)
    e[0] = 1.0
    worst = 0.0
    for s in range(1, S + 1):
        rho = np.zeros(n, dtype=dtype)
        for j in range(1, k + 1):
            m = s - k - 1 + j
            if m >= 0:
                rho += bands[j] * np.roll(xi[m], j)
        for t in range(1, s):
            rho -= e[t] * xi[s - t]
        e[s] = rho.mean()
        xi[s], closure = _cycle_solve(rho - e[s], k + 1)
        scale = 1.0 + np.max(np.abs(rho))
        if closure > CLOSURE_TOL * scale:
            raise ArithmeticError(f"cycle closure {closure:.3e} at order {s}")
        worst = max(worst, closure / scale)
    return MinusSeries(S, e[1:].copy(), xi[1:].copy(), worst)


@dataclass(frozen=True)
class PlusSeries:
    """Expansion at ``p+``.

    ``phi`` and ``xi_plus`` are sampled on the window ``i = -n..n``;
    ``phi[i + n]`` is ``phi_i`` and ``xi_plus[s - 1, i + n]`` is
    ``xi_s^+(i)``.  ``w[s - 1]`` is ``w_s``.
    """

    S: int
    n: int
    phi: np.ndarray
    xi_plus: np.ndarray
    w: np.ndarray
    r10: complex

    def phi_at(self, i):
        return self.phi[i + self.n]

    def xi_at(self, s, i):
        return self.xi_plus[s - 1, i + self.n]


def log_leading(L, complex_mode=False):
    a1 = L.a[:, 0]
    if complex_mode or not L.is_real:
        return np.log(a1.astype(complex))
    if np.any(a1 <= 0):
        raise NonPositiveLeading("a^(1) must be positive in real mode")
    return np.log(a1)


def phi_window(L, lo, hi, complex_mode=False):
    """``phi_i`` for ``i = lo..hi`` with ``phi_0 = 0``."""
    la = log_leading(L, complex_mode)
    phi = np.zeros(hi - lo + 1, dtype=la.dtype)
    for i in range(1, hi + 1):
        phi[i - lo] = phi[i - 1 - lo] + la[(i - 1) % L.n]
    for i in range(0, lo, -1):
        phi[i - 1 - lo] = phi[i - lo] - la[(i - 1) % L.n]
    return phi


def plus_series(L, S=DEFAULT_ORDER, complex_mode=False):
    """Solve ``L psi = E psi`` at ``p+`` through order ``S``."""
    validate(L)
    if S < 1:
        raise ValueError("order must be at least 1")
    n, k = L.n, L.k
    lo, hi = -n - S * (k + 1), n
    phi = phi_window(L, lo, hi, complex_mode)
    dtype = np.result_type(phi, L.a)
    size = hi - lo + 1

    def idx(i):
        return i - lo

    # weight[j][i] = a_i^(j) exp(phi_{i-j} - phi_i), defined for i >= lo + j
    weight = {}
    for j in range(2, k + 2):
        wj = np.zeros(size, dtype=dtype)
        for i in range(lo + j, hi + 1):
            wj[idx(i)] = L.coef(i, j) * np.exp(phi[idx(i - j)] - phi[idx(i)])
        weight[j] = wj

    xi = np.zeros((S + 1, size), dtype=dtype)
    xi[0] = 1.0
    for s in range(1, S + 1):
        start = lo + s * (k + 1)
        q = np.zeros(size, dtype=dtype)
        for i in range(start, hi + 1):
            acc = 0.0
            for j in range(2, k + 2):
                m = s - j + 1
                if m >= 0:
                    acc = acc + weight[j][idx(i)] * xi[m, idx(i - j)]
            q[idx(i)] = acc
        for i in range(1, hi + 1):
            xi[s, idx(i)] = xi[s, idx(i - 1)] + q[idx(i)]
        for i in range(0, start, -1):
            xi[s, idx(i - 1)] = xi[s, idx(i)] - q[idx(i)]

    window = slice(idx(-n), idx(n) + 1)
    r10 = np.prod(L.a[:, 0])
    w = xi[1:, idx(-n)].copy()
    return PlusSeries(S, n, phi[window].copy(), xi[1:, window].copy(), w, r10)


def log_series(c):
    """Coefficients of ``log(1 + sum_{s>=1} c_s x^s)``; ``c[0]`` must be 1."""
    c = np.asarray(c)
    g = np.zeros_like(c)
    for s in range(1, len(c)):
        acc = s * c[s]
        for t in range(1, s):
            acc -= t * g[t] * c[s - t]
        g[s] = acc / s
    return g


def hamiltonian_e(L, m):
    """``e_{m+k+1}``, the Hamiltonian of the ``t_m^-`` flow on the leaf of fixed ``e_1..e_k``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    S = m + L.k + 1
    return minus_series(L, S).e[S - 1]


def hamiltonian_log(L, m, i, family="minus", S=None):
    """Logarithmic Hamiltonians of the ``t_m^-`` / ``t_m^+`` flows.

    ``family="minus"``: for ``i = 1`` the coefficient of ``z^m`` in
    ``log(z^{k+1} E(z))``; for ``i = 0`` this is ``e_{m+k+1}``.
    ``family="plus"``: ``1/n`` times the coefficient of ``E^{m+i-1}`` in
    ``log(r_{1,0} E^{-n} w(E))``.  Residues of ``z^a log z dz`` with
    ``a != -1`` are taken to be zero.
    """
    if m < 1 or i not in (0, 1):
        raise ValueError("need m >= 1 and i in {0, 1}")
    if family == "minus":
        if i == 0:
            return hamiltonian_e(L, m)
        order = m
        S = S or order
        if S < order:
            raise OrderUnavailable(f"order {order} needs S >= {order}")
        e = minus_series(L, S).e
        return log_series(np.concatenate([[1.0], e]))[order]
    if family == "plus":
        order = m + i - 1
        if order < 1:
            raise OrderUnavailable("res E^{-1} log E is excluded")
        S = S or order
        if S < order:
            raise OrderUnavailable(f"order {order} needs S >= {order}")
        w = plus_series(L, S).w
        return log_series(np.concatenate([[1.0], w]))[order] / L.n
    raise ValueError(f"unknown family {family!r}")
