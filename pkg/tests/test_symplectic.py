import numpy as np
import pytest
from conftest import operators
from hypothesis import given, settings
from hypothesis import strategies as st

from toda_tri.charts import Chart, ChartPoint, chart_from_operator, operator_from_x_chart
from toda_tri.errors import ChartMismatch, InconsistentSystem
from toda_tri.flows import integrate
from toda_tri.frame import FramePair, exp_minus_phi, operator_to_frame
from toda_tri.operator import TriangularOperator, random_operator
from toda_tri.series import _cycle_solve, hamiltonian_e
from toda_tri.symplectic import (
    fit_constant,
    frame_flow_tangent,
    frame_hamiltonian,
    gradient,
    hamiltonian_value,
    hamiltonian_vector_field,
    load_calibration,
    match_lax,
    omega1_evaluate,
    snap_constant,
    symplectic_matrix,
)
from toda_tri.verify import _leaf_operator, fd_gradient, random_chart_point


@pytest.mark.parametrize("n", [3, 5, 7, 9])
def test_phi_form_circulant_spectrum(n):
    sm = symplectic_matrix("phi-k1", n)
    assert np.array_equal(sm.omega.T, -sm.omega)
    assert sm.rank == n - 1
    assert np.allclose(sm.kernel_basis[0] / sm.kernel_basis[0][0], 1)
    # symbol lambda - 1/lambda on the n-th roots of unity
    lam = np.exp(2j * np.pi * np.arange(n) / n)
    expected = np.sort((lam - 1 / lam).imag)
    assert np.allclose(np.sort(np.linalg.eigvals(sm.omega).imag), expected)


def test_x_form_kernel_is_constants():
    sm = symplectic_matrix("x-k1", 5)
    assert sm.kernel_basis.shape[0] == 1
    assert np.max(np.abs(sm.omega @ sm.kernel_basis[0])) < 1e-12


def test_xy_form_kernel():
    L = random_operator(7, 2, 4)
    pt = chart_from_operator(L, "xy-k2")
    sm = symplectic_matrix("xy-k2", 7, base=pt)
    assert np.array_equal(sm.omega.T, -sm.omega)
    for v in sm.kernel_basis:
        assert np.max(np.abs(sm.omega @ v)) < 1e-12


def test_constant_points():
    n = 5
    phi = ChartPoint("phi-k1", n, np.zeros(n), (0.0,))
    assert hamiltonian_value(phi, "hminus") == pytest.approx(n)
    assert hamiltonian_value(phi, "hplus") == pytest.approx(n)
    assert np.allclose(gradient(phi, "hminus"), 0)
    x = ChartPoint("x-k1", n, np.full(n, 0.7), (1.0,))
    assert hamiltonian_value(x, "xcubic") == 0 and hamiltonian_value(x, "e3") == 0
    v, res = hamiltonian_vector_field(phi, "hminus")
    assert np.allclose(v, 0) and res < 1e-14


def test_xcubic_gradient_by_hand():
    x = np.random.default_rng(1).normal(size=7)
    pt = ChartPoint("x-k1", 7, x, (0.0,))
    prev, nxt = np.roll(x, 1), np.roll(x, -1)
    assert np.allclose(gradient(pt, "xcubic"), 2 * x * (prev - nxt) + nxt**2 - prev**2)


@pytest.mark.parametrize("which", ["hminus", "hplus", "e3", "e3-full", "e4", "xcubic"])
@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_gradient_finite_difference(which, seed):
    pt = random_chart_point(which, np.random.default_rng(seed))
    g = gradient(pt, which)
    assert np.max(np.abs(g - fd_gradient(pt, which))) <= 1e-7 * max(1.0, np.max(np.abs(g)))


def test_wrong_chart():
    pt = ChartPoint("x-k1", 5, np.zeros(5), (1.0,))
    with pytest.raises(ChartMismatch):
        hamiltonian_value(pt, "hminus")


def test_gradient_outside_range():
    # a gradient with a component along the kernel cannot be matched
    pt = ChartPoint("x-k1", 5, np.zeros(5), (1.0,))
    sm = symplectic_matrix("x-k1", 5)
    g = sm.kernel_basis[0]
    import toda_tri.symplectic as sym

    original = sym.gradient
    sym.gradient = lambda p, w: g
    try:
        with pytest.raises(InconsistentSystem):
            hamiltonian_vector_field(pt, "xcubic")
    finally:
        sym.gradient = original


K1 = [(5, 1), (7, 1)]


@pytest.mark.parametrize("L", operators(6, shapes=K1), ids=lambda L: f"n{L.n}")
def test_phi_matches(L):
    assert match_lax("phi-k1", L, "hminus", "xi") < 1e-9
    assert match_lax("phi-k1", L, "hplus", "eta") < 1e-9


@pytest.mark.parametrize("L", operators(6, shapes=[(5, 2), (7, 2)]), ids=lambda L: f"n{L.n}")
def test_e4_matches(L):
    assert match_lax("xy-k2", L, "e4", "xi") < 1e-8
    assert abs(hamiltonian_value(chart_from_operator(L, "xy-k2"), "e4") - hamiltonian_e(L, 1)) < 1e-10


@pytest.mark.parametrize("L", operators(6, shapes=K1), ids=lambda L: f"n{L.n}")
def test_corrected_e3(L):
    pt = chart_from_operator(L, "x-k1")
    assert abs(hamiltonian_value(pt, "e3-full") - hamiltonian_e(L, 1)) < 1e-10
    assert match_lax("x-k1", L, "e3-full", "xi") < 1e-9


@pytest.mark.parametrize("trial", range(4))
def test_cubic_on_traceless_leaf(trial):
    L = _leaf_operator(7, trial, 5 + 2 * (trial % 2))
    pt = chart_from_operator(L, "x-k1")
    assert abs(pt.params[0]) < 1e-12
    assert match_lax("x-k1", L, "xcubic", "xi") < 1e-9
    assert abs(hamiltonian_value(pt, "e3") - hamiltonian_e(L, 1)) < 1e-10


def test_cubic_average_misses_e1_term():
    # off the leaf e_1 = 0 the cubic average differs from e_3 by e_1 <x_i^2 - x_i x_{i+1}>
    L = random_operator(5, 1, 0)
    pt = chart_from_operator(L, "x-k1")
    x, (e1,) = pt.x, pt.params
    gap = hamiltonian_value(pt, "e3") - hamiltonian_e(L, 1)
    assert abs(gap - e1 * np.mean(x**2 - x * np.roll(x, -1))) < 1e-12
    assert abs(gap) > 1e-3


def test_trivial_fixed_point(trivial):
    assert match_lax("phi-k1", trivial, "hminus", "xi") < 1e-15
    assert match_lax("phi-k1", trivial, "hplus", "eta") < 1e-15


def test_frozen_calibration_reproduced():
    cal = load_calibration()
    L = random_operator(7, 1, 21)
    c = fit_constant("phi-k1", L, "hminus", "xi")
    sigma, scale = snap_constant(c, 7)
    assert cal["pairs"]["phi-k1/hminus/xi"] == {"sigma": sigma, "scale": scale}
    L2 = random_operator(7, 2, 21)
    sigma, scale = snap_constant(fit_constant("xy-k2", L2, "e4", "xi"), 7)
    assert cal["pairs"]["xy-k2/e4/xi"] == {"sigma": sigma, "scale": scale}


@pytest.mark.parametrize("chart, which, flow, k", [("phi-k1", "hminus", "xi", 1), ("phi-k1", "hplus", "eta", 1),
                                                   ("xy-k2", "e4", "xi", 2), ("x-k1", "e3-full", "xi", 1)])
def test_energy_conservation(chart, which, flow, k):
    L = random_operator(5, k, 2, range=(0.8, 1.2), sym=0.3)
    traj = integrate(L, flow, 1.0, 1e-3, monitor_every=10**6)
    values = [hamiltonian_value(chart_from_operator(traj.operator(idx), chart), which)
              for idx in range(0, len(traj.states), 100)]
    assert np.max(np.abs(np.array(values) - values[0])) < 1e-8


def test_dual_coefficient_chi1():
    # chi_1(i + 3) - chi_1(i) = e_1 - a_{i+2}^(2) solves to -x_{i-1} up to a constant
    L = random_operator(7, 2, 6)
    pt = chart_from_operator(L, "xy-k2")
    n = L.n
    a2 = L.a[:, 1]
    # residue-indexed rhs r(m) with m = i + 3: e_1 - a_{m-1}^(2)
    rhs = np.array([pt.params[0] - a2[(m - 2) % n] for m in range(n)])
    chi, closure = _cycle_solve(rhs, 3)
    assert closure < 1e-12
    x = pt.x
    expected = np.array([-x[(i - 2) % n] for i in range(n)])
    assert np.allclose(chi - chi[0], expected - expected[0])


# form on frames

def _frame(n, k, seed):
    return operator_to_frame(random_operator(n, k, seed))


def _tangent(F, rng):
    return rng.normal(size=F.Phi.shape) + 1j * rng.normal(size=F.Phi.shape)


@pytest.mark.parametrize("n, k", [(5, 1), (5, 2), (7, 2)])
def test_omega1_antisymmetric_bilinear(n, k):
    F = _frame(n, k, 3)
    rng = np.random.default_rng(1)
    d1, d2, d3 = (_tangent(F, rng) for _ in range(3))
    assert abs(omega1_evaluate(F, d1, d1)) < 1e-12
    assert abs(omega1_evaluate(F, d1, d2) + omega1_evaluate(F, d2, d1)) < 1e-12
    lhs = omega1_evaluate(F, 2 * d1 + 3j * d3, d2)
    rhs = 2 * omega1_evaluate(F, d1, d2) + 3j * omega1_evaluate(F, d3, d2)
    assert abs(lhs - rhs) < 1e-12 * max(1, abs(lhs))


def test_omega1_k1_reduces_to_phi_form():
    F = _frame(7, 1, 4)
    rng = np.random.default_rng(2)
    d1, d2 = _tangent(F, rng), _tangent(F, rng)
    h = 1e-6

    def dvarphi(d):
        # d varphi_i = -d(e^{-varphi_i}) / e^{-varphi_i}
        up = exp_minus_phi(FramePair(F.Phi + h * d, F.W))
        dn = exp_minus_phi(FramePair(F.Phi - h * d, F.W))
        return -(up - dn) / (2 * h) / exp_minus_phi(F)

    v1, v2 = dvarphi(d1), dvarphi(d2)
    expected = np.mean(np.roll(v1, 1) * v2 - np.roll(v2, 1) * v1)
    assert abs(omega1_evaluate(F, d1, d2) - expected) < 1e-7 * max(1, abs(expected))


@pytest.mark.parametrize("n, k", [(5, 1), (5, 2), (7, 2)])
def test_omega1_column_scaling_is_null(n, k):
    F = _frame(n, k, 5)
    rng = np.random.default_rng(3)
    for ell in range(k):
        c = np.zeros_like(F.Phi)
        c[ell] = (0.3 - 0.8j) * F.Phi[ell]
        assert abs(omega1_evaluate(F, c, _tangent(F, rng))) < 1e-9


@pytest.mark.parametrize("flow", ["xi", "eta"])
@pytest.mark.parametrize("n, k", [(5, 1), (7, 1), (5, 2), (7, 2)])
def test_omega1_hamiltonian(flow, n, k):
    L = random_operator(n, k, 8)
    F = operator_to_frame(L)
    const = load_calibration()["omega1"]
    d = _tangent(F, np.random.default_rng(4))
    h = 1e-6
    dH = (frame_hamiltonian(FramePair(F.Phi + h * d, F.W), flow)
          - frame_hamiltonian(FramePair(F.Phi - h * d, F.W), flow)) / (2 * h)
    X = frame_flow_tangent(F, L, flow)
    assert abs(omega1_evaluate(F, X, d) - const * dH) < 1e-6 * max(1, abs(dH))
