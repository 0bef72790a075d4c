"""Periodic strictly lower-triangular difference operators.

An operator of period ``n`` and order parameter ``k`` acts on bi-infinite
sequences by

    (L psi)_i = psi_{i-k-1} + sum_{j=1..k} a_i^(j) psi_{i-j},

with coefficients ``a_i^(j) = a_{i+n}^(j)``.  Sites are numbered 1..n; site 0
is identified with site n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidRange,
    LeadingCoefficientZero,
    NotCoprime,
    OrderExceedsPeriod,
    ParseError,
)

EPS_MIN = 1e-12


@dataclass(frozen=True)
class TriangularOperator:
    """Coefficient table of ``L = T^{-k-1} + sum_j a_i^(j) T^{-j}``.

    Parameters
    ----------
    n : int
        Period.
    k : int
        Number of free bands; the ``T^{-k-1}`` coefficient is 1.
    a : numpy.ndarray
        Array of shape ``(n, k)``; ``a[i - 1, j - 1]`` is ``a_i^(j)`` for
        sites ``i = 1..n``.  Real or complex.
    """

    n: int
    k: int
    a: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, copy=True)
        if a.dtype.kind not in "fc":
            a = a.astype(float)
        if a.shape != (self.n, self.k):
            raise ValueError(f"coefficient table has shape {a.shape}, expected {(self.n, self.k)}")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    @property
    def is_real(self):
        return self.a.dtype.kind == "f"

    def band(self, j):
        """Band ``j`` as an array indexed by residue: ``out[i % n] = a_i^(j)``.

        ``j = k + 1`` gives the constant unit band.
        """
        if j == self.k + 1:
            return np.ones(self.n, dtype=self.a.dtype)
        if not 1 <= j <= self.k:
            raise IndexError(j)
        return np.roll(self.a[:, j - 1], 1)

    def coef(self, i, j):
        if j == self.k + 1:
            return 1.0
        return self.a[(i - 1) % self.n, j - 1]

    def with_coefficients(self, a):
        return TriangularOperator(self.n, self.k, a)

    def to_dict(self):
        rows = [[_jsonable(v) for v in row] for row in self.a]
        return {"n": int(self.n), "k": int(self.k), "a": rows}

    @classmethod
    def from_dict(cls, data):
        try:
            n, k, rows = int(data["n"]), int(data["k"]), data["a"]
            vals = [[_from_json(v) for v in row] for row in rows]
            cplx = any(isinstance(v, complex) for row in vals for v in row)
            a = np.array(vals, dtype=complex if cplx else float).reshape(n, k)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed operator object: {exc}") from exc
        return cls(n, k, a)


def _jsonable(v):
    if np.iscomplexobj(v):
        return {"re": float(v.real), "im": float(v.imag)}
    return float(v)


def _from_json(v):
    if isinstance(v, dict):
        return complex(float(v["re"]), float(v["im"]))
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError(f"coefficient {v!r} is not a number")
    return float(v)


def validate(L, eps_min=EPS_MIN):
    """Raise if ``L`` violates the standing assumptions; return None otherwise."""
    n, k = L.n, L.k
    if n < 1 or k < 1:
        raise ValueError("n and k must be positive")
    for i in range(1, n + 1):
        if abs(L.a[i - 1, 0]) < eps_min:
            raise LeadingCoefficientZero(i)
    if math.gcd(n, k + 1) != 1:
        raise NotCoprime(n, k + 1)
    if k + 1 > n:
        raise OrderExceedsPeriod(f"k + 1 = {k + 1} exceeds the period n = {n}")


def adjoint_coefficients(L):
    """Coefficients ``b_i^(j) = a_{i+j}^(j)`` of the formal adjoint operator.

    The adjoint ``T^{k+1} + sum_j b_i^(j) T^j`` is upper triangular; the
    returned table uses the same ``(n, k)`` site-major layout as ``L.a``.
    """
    validate(L)
    b = np.empty_like(L.a)
    for j in range(1, L.k + 1):
        b[:, j - 1] = np.roll(L.a[:, j - 1], -j)
    return b


def from_adjoint_coefficients(n, k, b):
    """Inverse of :func:`adjoint_coefficients`."""
    b = np.asarray(b)
    a = np.empty_like(b)
    for j in range(1, k + 1):
        a[:, j - 1] = np.roll(b[:, j - 1], j)
    return TriangularOperator(n, k, a)


def random_operator(n, k, seed, range=(0.5, 1.5), sym=None):
    """Seeded random operator.

    ``a^(1)`` is drawn uniformly from ``[lo, hi]`` and the other bands from
    ``[-sym, sym]`` (``sym`` defaults to ``hi``).  ``seed`` is anything
    accepted by ``numpy.random.default_rng``.
    """
    lo, hi = range
    sym = hi if sym is None else sym
    if not 0 < lo < hi:
        raise InvalidRange(f"need 0 < lo < hi, got {range!r}")
    if math.gcd(n, k + 1) != 1:
        raise NotCoprime(n, k + 1)
    rng = np.random.default_rng(seed)
    a = np.empty((n, k))
    a[:, 0] = rng.uniform(lo, hi, size=n)
    if k > 1:
        a[:, 1:] = rng.uniform(-sym, sym, size=(n, k - 1))
    L = TriangularOperator(n, k, a)
    validate(L)
    return L


def apply_window(L, psi, start):
    """Apply ``L`` to a finite window of a sequence.

    ``psi[m]`` holds the value at site ``start + m``.  Returns the array of
    ``(L psi)_i`` for ``i = start + k + 1, ..., start + len(psi) - 1``.
    """
    psi = np.asarray(psi)
    N = len(psi)
    out = np.zeros(N - L.k - 1, dtype=np.result_type(psi, L.a))
    for m in range(L.k + 1, N):
        i = start + m
        acc = psi[m - L.k - 1]
        for j in range(1, L.k + 1):
            acc = acc + L.coef(i, j) * psi[m - j]
        out[m - L.k - 1] = acc
    return out
