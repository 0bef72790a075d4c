"""Spectral curve, Floquet multipliers and Bloch eigenvectors.

Restricting ``L`` to the space of sequences with ``psi_{i-n} = w psi_i``
gives an ``n x n`` matrix ``M(w)``; the spectral curve is
``R(w, E) = -det(E - M(w)) = 0``, stored with the ``E^n`` coefficient
normalized to -1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .errors import (
    DegenerateRoots,
    DerivativeVanishes,
    NonSimpleEigenvalue,
    NotOnCurve,
    ShapeViolation,
)
from .operator import TriangularOperator, validate

SHAPE_EPS = 1e-9
NOISE_EPS = 1e-13


def _banded_qp_matrix(n, bands, w):
    # bands[j] is indexed by residue i % n
    dtype = np.result_type(complex, *bands.values())
    M = np.zeros((n, n), dtype=dtype)
    for i in range(1, n + 1):
        for j, b in bands.items():
            ip = i - j
            factor = 1.0
            while ip < 1:
                ip += n
                factor = factor * w
            M[i - 1, ip - 1] += b[i % n] * factor
    return M


def _operator_bands(L):
    return {j: L.band(j) for j in range(1, L.k + 2)}


def quasi_periodic_matrix(L, w):
    """The matrix of ``L`` restricted to ``{psi : psi_{i-n} = w psi_i}``.

    Rows and columns are sites 1..n.  Entry ``(i, i')`` collects
    ``a_i^(j) w^q`` over bands with ``i - j = i' - q n``.
    """
    return _banded_qp_matrix(L.n, _operator_bands(L), w)


@dataclass(frozen=True)
class SpectralCurve:
    """Sparse bivariate polynomial ``R(w, E) = sum r_ij w^i E^j``."""

    n: int
    k: int
    terms: dict = field(default_factory=dict)

    def coefficient(self, i, j):
        return self.terms.get((i, j), 0.0)

    def __call__(self, w, E):
        return sum(r * w**i * E**j for (i, j), r in self.terms.items())

    def d_dw(self, w, E):
        return sum(i * r * w ** (i - 1) * E**j for (i, j), r in self.terms.items() if i)

    def d_dE(self, w, E):
        return sum(j * r * w**i * E ** (j - 1) for (i, j), r in self.terms.items() if j)

    def scale(self, w, E):
        """Sum of term magnitudes; the natural unit for residual checks."""
        return sum(abs(r) * abs(w) ** i * abs(E) ** j for (i, j), r in self.terms.items())

    def max_abs(self):
        return max(abs(r) for r in self.terms.values())

    def to_dict(self):
        rows = []
        for (i, j), r in sorted(self.terms.items()):
            rows.append({"i": int(i), "j": int(j), "r": float(np.real(r))})
        return {"n": int(self.n), "k": int(self.k), "terms": rows}

    @classmethod
    def from_dict(cls, data):
        terms = {(int(t["i"]), int(t["j"])): float(t["r"]) for t in data["terms"]}
        return cls(int(data["n"]), int(data["k"]), terms)


def in_support(n, k, i, j):
    """Whether ``w^i E^j`` may appear besides the two corner monomials."""
    return i > 0 and j >= 0 and n * i + (k + 1) * j < n * (k + 1)


def characteristic_curve(L, shape_eps=SHAPE_EPS):
    """Compute ``R(w, E)`` by two-dimensional interpolation on roots of unity.

    ``det(E - M(w))`` has degree ``k + 1`` in ``w`` and ``n`` in ``E``, so its
    values on a ``(k + 2) x (n + 1)`` grid of roots of unity determine every
    coefficient through one inverse DFT.

    Raises
    ------
    ShapeViolation
        If a monomial outside the Newton polygon exceeds
        ``shape_eps * max|r|``.
    """
    validate(L)
    n, k = L.n, L.k
    P, Q = k + 2, n + 1
    ws = np.exp(2j * np.pi * np.arange(P) / P)
    Es = np.exp(2j * np.pi * np.arange(Q) / Q)
    vals = np.empty((P, Q), dtype=complex)
    eye = np.eye(n)
    for a, w in enumerate(ws):
        M = quasi_periodic_matrix(L, w)
        for b, E in enumerate(Es):
            vals[a, b] = np.linalg.det(E * eye - M)
    coeffs = np.fft.fft2(vals) / (P * Q)
    coeffs = -coeffs / coeffs[0, n]
    if L.is_real:
        coeffs = coeffs.real
    big = np.max(np.abs(coeffs))
    terms = {}
    for i in range(P):
        for j in range(Q):
            r = coeffs[i, j]
            if (i, j) in ((k + 1, 0), (0, n)):
                terms[(i, j)] = r
                continue
            if abs(r) <= NOISE_EPS * big:
                continue
            if not in_support(n, k, i, j):
                if abs(r) > shape_eps * big:
                    raise ShapeViolation(i, j, r)
                continue
            terms[(i, j)] = r
    terms[(0, n)] = -1.0
    return SpectralCurve(n, k, dict(sorted(terms.items())))


def floquet_polynomial(L, curve=None):
    """``det L(w) = w^{k+1} + sum_{i=1..k} r_{i,0} w^i`` as a Polynomial."""
    curve = curve or characteristic_curve(L)
    coef = np.array([curve.coefficient(i, 0) for i in range(L.k + 2)])
    return Polynomial(coef / coef[-1])


def floquet_roots(L, curve=None, sep=1e-8):
    """The ``k`` nonzero roots of ``det L(w)``, sorted by (real, imag)."""
    p = floquet_polynomial(L, curve)
    # drop the factor w: coefficients r_{1,0}, ..., r_{k,0}, 1
    c = p.coef[1:]
    k = len(c) - 1
    comp = np.zeros((k, k), dtype=complex)
    comp[1:, :-1] = np.eye(k - 1)
    comp[:, -1] = -c[:-1]
    roots = np.linalg.eigvals(comp)
    roots = sorted(roots, key=lambda z: (round(z.real, 10), round(z.imag, 10)))
    roots = np.array(roots, dtype=complex)
    top = np.max(np.abs(roots))
    for a in range(k):
        for b in range(a + 1, k):
            if abs(roots[a] - roots[b]) < sep * top:
                raise DegenerateRoots(f"Floquet roots {roots[a]} and {roots[b]} coincide")
    return roots


def phase_normalize(v):
    """Unit vector with its largest component (first among ties) real positive."""
    v = v / np.linalg.norm(v)
    mags = np.abs(v)
    idx = int(np.argmax(mags >= (1 - 1e-8) * mags.max()))
    return v * (np.conj(v[idx]) / mags[idx])


@dataclass(frozen=True)
class CurvePoint:
    w: complex
    E: complex
    psi: np.ndarray
    psi_dual: np.ndarray


def point_eigenvectors(L, w, E, curve=None, tol=1e-8):
    """Right and left null vectors of ``M(w) - E`` at a simple curve point."""
    curve = curve or characteristic_curve(L)
    if abs(curve(w, E)) > tol * max(curve.scale(w, E), 1.0):
        raise NotOnCurve(f"|R({w}, {E})| = {abs(curve(w, E)):.3e}")
    A = quasi_periodic_matrix(L, w) - E * np.eye(L.n)
    U, s, Vh = np.linalg.svd(A)
    if s[-2] - s[-1] <= tol * max(1.0, s[0]):
        raise NonSimpleEigenvalue(f"singular values {s[-2]:.3e}, {s[-1]:.3e}")
    psi = phase_normalize(Vh[-1].conj())
    psi_dual = phase_normalize(U[:, -1].conj())
    return CurvePoint(complex(w), complex(E), psi, psi_dual)


def descendent(L):
    """Band table of ``L^(1) = sum_j j a_i^(j) T^{-j}``, including band k+1.

    Accepts an operator or a previously returned table of shape
    ``(n, k + 1)``; each column ``j`` is multiplied by ``j``.
    """
    if isinstance(L, TriangularOperator):
        table = np.hstack([L.a, np.ones((L.n, 1), dtype=L.a.dtype)])
    else:
        table = np.asarray(L)
    weights = np.arange(1, table.shape[1] + 1)
    return table * weights


def descendent_matrix(L, w):
    table = descendent(L)
    bands = {j: np.roll(table[:, j - 1], 1) for j in range(1, L.k + 2)}
    return _banded_qp_matrix(L.n, bands, w)


def domega_identity_ratio(L, pt, curve=None, tol=1e-12):
    """Ratio of the two sides of ``dE <psi+ psi> = dw/(n w) <psi+ L^(1) psi>``.

    Equals 1 at every simple point of every curve.
    """
    curve = curve or characteristic_curve(L)
    w, E = pt.w, pt.E
    if abs(curve(w, E)) > 1e-8 * max(curve.scale(w, E), 1.0):
        raise NotOnCurve(f"|R({w}, {E})| = {abs(curve(w, E)):.3e}")
    RE = curve.d_dE(w, E)
    if abs(RE) < tol * max(curve.scale(w, E), 1.0):
        raise DerivativeVanishes("dR/dE vanishes")
    dEdw = -curve.d_dw(w, E) / RE
    pair = pt.psi_dual @ pt.psi
    desc = pt.psi_dual @ descendent_matrix(L, w) @ pt.psi
    return dEdw * pair * L.n * w / desc


def sample_curve_points(L, count, rng, curve=None):
    """Random simple points: ``w`` on an annulus, ``E`` an eigenvalue of ``M(w)``."""
    curve = curve or characteristic_curve(L)
    points = []
    while len(points) < count:
        w = rng.uniform(0.5, 2.0) * np.exp(2j * np.pi * rng.uniform())
        eig = np.linalg.eigvals(quasi_periodic_matrix(L, w))
        E = eig[rng.integers(len(eig))]
        try:
            points.append(point_eigenvectors(L, w, E, curve))
        except (NotOnCurve, NonSimpleEigenvalue):
            continue
    return points
