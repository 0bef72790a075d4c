import numpy as np
import pytest
from conftest import operators
from hypothesis import given, settings
from hypothesis import strategies as st

from toda_tri.errors import NonPositiveLeading, OrderUnavailable
from toda_tri.operator import TriangularOperator, random_operator
from toda_tri.series import (
    hamiltonian_e,
    hamiltonian_log,
    log_series,
    minus_series,
    plus_series,
)
from toda_tri.spectral import characteristic_curve
from toda_tri.verify import curve_along_minus, curve_along_plus, minus_residual, plus_residual


def test_worked_minus(trivial):
    ms = minus_series(trivial, 3)
    assert np.allclose(ms.e, [1, 0, 0], atol=1e-12)


def test_worked_plus(trivial):
    ps = plus_series(trivial, 1)
    assert abs(ps.w[0] + 3) < 1e-12
    for i in range(-3, 4):
        assert abs(ps.xi_at(1, i) - i) < 1e-12


def test_worked_logarithmic_hamiltonians(trivial):
    assert abs(hamiltonian_log(trivial, 2, 1, "minus") + 0.5) < 1e-12
    assert abs(hamiltonian_log(trivial, 1, 1, "plus") + 1) < 1e-12


@pytest.mark.parametrize("L", operators(15), ids=lambda L: f"n{L.n}k{L.k}")
def test_residuals_and_vanishing_e(L):
    ms = minus_series(L, 6)
    assert minus_residual(L, ms) < 1e-9
    assert plus_residual(L, plus_series(L, 6)) < 1e-9
    assert abs(ms.e[L.k]) < 1e-10
    assert abs(ms.e[0] - L.a[:, L.k - 1].mean()) < 1e-12
    assert np.all(ms.xi[:, 0] == 0)


@pytest.mark.parametrize("L", operators(15, seed=2), ids=lambda L: f"n{L.n}k{L.k}")
def test_series_annihilate_curve(L):
    curve = characteristic_curve(L)
    assert np.max(np.abs(curve_along_minus(curve, minus_series(L, 6).e, 6))) < 1e-8
    ps = plus_series(L, 6)
    assert np.max(np.abs(curve_along_plus(curve, ps.w, ps.r10, 6))) < 1e-8


@pytest.mark.parametrize("L", operators(15, seed=3), ids=lambda L: f"n{L.n}k{L.k}")
def test_w1_sum_identity(L):
    a1 = L.a[:, 0]
    a2 = L.a[:, 1] if L.k >= 2 else np.ones(L.n)
    expected = -np.sum(a2 / (a1 * np.roll(a1, 1)))
    assert abs(plus_series(L, 1).w[0] - expected) < 1e-9


@pytest.mark.parametrize("L", operators(6, seed=4), ids=lambda L: f"n{L.n}k{L.k}")
def test_w1_average_form(L):
    # <xi_1(i-1) - xi_1(i)> over a period equals w_1 / n
    ps = plus_series(L, 1)
    diffs = [ps.xi_at(1, i - 1) - ps.xi_at(1, i) for i in range(1, L.n + 1)]
    assert abs(np.mean(diffs) - ps.w[0] / L.n) < 1e-12


def test_w1_from_eigenvalues():
    # w(E) / (E^n / r10) - 1 ~ w_1 E for small E, on the branch through p+
    L = random_operator(5, 2, 7)
    ps = plus_series(L, 2)
    curve = characteristic_curve(L)
    E = 1e-3
    coeffs = [curve.coefficient(i, 0) + sum(curve.coefficient(i, j) * E**j for j in range(1, L.n + 1)) for i in range(L.k + 2)]
    roots = np.roots(coeffs[::-1])
    guess = E**L.n / ps.r10
    w = roots[np.argmin(abs(roots - guess))]
    approx = (w / guess - 1) / E
    assert abs(approx - ps.w[0]) < 1e-2 * max(1, abs(ps.w[0]))


def test_real_mode_needs_positive_leading():
    L = TriangularOperator(3, 1, np.array([[1.0], [-1.0], [1.0]]))
    with pytest.raises(NonPositiveLeading):
        plus_series(L, 2)
    ps = plus_series(L, 2, complex_mode=True)
    assert np.iscomplexobj(ps.phi)


@given(st.lists(st.floats(-0.5, 0.5), min_size=6, max_size=6))
@settings(max_examples=50, deadline=None)
def test_log_series_against_exponential(c):
    c = np.concatenate([[1.0], c])
    g = log_series(c)
    # exp of the log series reproduces c: exp(G) with G' = c'/c
    x = 0.05
    val_c = np.polyval(c[::-1], x)
    val_g = np.polyval(g[::-1], x)
    assert abs(np.exp(val_g) - val_c) < 1e-6


def test_hamiltonian_e_is_e_m_plus_k_plus_1():
    L = random_operator(7, 2, 1)
    assert hamiltonian_e(L, 1) == minus_series(L, 4).e[3]


def test_order_unavailable(trivial):
    with pytest.raises(OrderUnavailable):
        hamiltonian_log(trivial, 1, 0, "plus")
    with pytest.raises(OrderUnavailable):
        hamiltonian_log(trivial, 3, 1, "minus", S=2)
