"""Frame parametrization of operators by kernel vectors at ``E = 0``.

A frame is a ``k x n`` matrix ``Phi`` together with ``k`` nonzero Floquet
multipliers ``W``.  Row ``l`` is extended to all integers by
``phi^l_{i-n} = w_l phi^l_i``, and the operator is the unique ``L`` with
``L phi^l = 0`` for every row, recovered column by column with Cramer's rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonSimpleKernel, ParseError, SingularMinor
from .operator import TriangularOperator, validate
from .spectral import characteristic_curve, floquet_roots, phase_normalize, quasi_periodic_matrix

MINOR_TOL = 1e-10


@dataclass(frozen=True)
class FramePair:
    Phi: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        Phi = np.array(self.Phi, dtype=complex, ndmin=2)
        W = np.array(self.W, dtype=complex, ndmin=1)
        if Phi.shape[0] != W.shape[0]:
            raise ValueError("Phi needs one row per multiplier")
        Phi.setflags(write=False)
        W.setflags(write=False)
        object.__setattr__(self, "Phi", Phi)
        object.__setattr__(self, "W", W)

    @property
    def k(self):
        return self.Phi.shape[0]

    @property
    def n(self):
        return self.Phi.shape[1]

    def permuted(self, order):
        order = list(order)
        return FramePair(self.Phi[order], self.W[order])

    def scaled(self, lam):
        return FramePair(self.Phi * np.asarray(lam, dtype=complex)[:, None], self.W)

    def to_dict(self):
        cplx = lambda z: {"re": float(z.real), "im": float(z.imag)}  # noqa: E731
        return {
            "W": [cplx(w) for w in self.W],
            "Phi": [[cplx(z) for z in row] for row in self.Phi],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            W = [complex(w["re"], w["im"]) for w in data["W"]]
            Phi = [[complex(z["re"], z["im"]) for z in row] for row in data["Phi"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed frame object: {exc}") from exc
        return cls(np.array(Phi), np.array(W))


def extend_frame(F, i, Phi=None):
    """Column ``phi_i`` (a k-vector) for any integer site ``i``.

    ``Phi`` substitutes another k x n table extended with the same
    multipliers (used for tangent vectors).
    """
    Phi = F.Phi if Phi is None else Phi
    n = F.n
    m = (i - 1) % n + 1
    q = (i - m) // n
    return Phi[:, m - 1] * F.W ** (-q)


def _columns(F, sites, Phi=None):
    return np.stack([extend_frame(F, s, Phi) for s in sites], axis=1)


def _det(cols):
    if cols.shape[0] == 0:
        return 1.0 + 0j
    return np.linalg.det(cols)


def _check_minor(value, cols, site):
    scale = np.prod(np.linalg.norm(cols, axis=0)) if cols.size else 1.0
    if scale == 0 or abs(value) < MINOR_TOL * scale:
        raise SingularMinor(site, abs(value))


def leading_dets(F):
    """``|phi_{i-1}, ..., phi_{i-k}|`` for sites ``i = 1..n``."""
    out = np.empty(F.n, dtype=complex)
    for i in range(1, F.n + 1):
        cols = _columns(F, [i - c for c in range(1, F.k + 1)])
        out[i - 1] = _det(cols)
        _check_minor(out[i - 1], cols, i)
    return out


def exp_minus_phi(F):
    """``exp(-phi_i) = (-1)^{ik} |phi_{i-1}, ..., phi_{i-k}|`` for ``i = 1..n``."""
    sign = np.array([(-1) ** (i * F.k) for i in range(1, F.n + 1)])
    return sign * leading_dets(F)


def frame_to_operator(F, imag_tol=1e-10):
    """Reconstruct ``L`` from a frame; real output when the imaginary part is negligible."""
    n, k = F.n, F.k
    a = np.empty((n, k), dtype=complex)
    for i in range(1, n + 1):
        base = [i - c for c in range(1, k + 1)]
        cols = _columns(F, base)
        D = _det(cols)
        _check_minor(D, cols, i)
        target = extend_frame(F, i - k - 1)
        for j in range(1, k + 1):
            num = cols.copy()
            num[:, j - 1] = target
            a[i - 1, j - 1] = -_det(num) / D
    if np.max(np.abs(a.imag)) <= imag_tol * max(1.0, np.max(np.abs(a))):
        a = a.real
    return TriangularOperator(n, k, a)


def kernel_vector(L, w, tol=1e-8):
    A = quasi_periodic_matrix(L, w)
    _, s, Vh = np.linalg.svd(A)
    if s[-2] <= tol * max(1.0, s[0]):
        raise NonSimpleKernel(f"kernel of M({w}) is not one-dimensional")
    return phase_normalize(Vh[-1].conj())


def operator_to_frame(L, curve=None):
    """Frame of ``L``: Floquet roots ``W`` and unit kernel vectors of ``M(w_l)``."""
    validate(L)
    W = floquet_roots(L, curve or characteristic_curve(L))
    Phi = np.stack([kernel_vector(L, w) for w in W])
    return FramePair(Phi, W)


def positive_scaling(F, tol=1e-10):
    """Rescale one row so that every ``exp(-phi_i)`` is real positive, if possible.

    Returns the rescaled frame and whether the attempt succeeded.
    """
    emp = exp_minus_phi(F)
    lam = np.ones(F.k, dtype=complex)
    lam[0] = np.conj(emp[0]) / abs(emp[0])
    G = F.scaled(lam)
    emp = exp_minus_phi(G)
    ok = bool(np.all(emp.real > 0) and np.max(np.abs(emp.imag)) <= tol * np.max(np.abs(emp)))
    return G, ok


def dual_minors(F, i):
    """Residue-weighted dual values ``r_l psi_i^+(p_l)`` for ``l = 1..k``.

    With ``B = [phi_{i-2}, ..., phi_{i-k-1}]`` this is the cofactor of row
    ``l`` in the last column divided by ``det B``, so that
    ``sum_l r_l psi_i^+(p_l) phi^l_{i-j}`` is 0 for ``j = 2..k`` and 1 for
    ``j = k + 1``.
    """
    k = F.k
    B = _columns(F, [i - c for c in range(2, k + 2)])
    D = _det(B)
    _check_minor(D, B, i)
    out = np.empty(k, dtype=complex)
    for l in range(k):
        minor = np.delete(np.delete(B, l, axis=0), k - 1, axis=1)
        out[l] = (-1) ** (l + 1 + k) * _det(minor) / D
    return out
