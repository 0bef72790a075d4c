import numpy as np
import pytest
from conftest import dense_operator, operators

from toda_tri.errors import InvalidStateError
from toda_tri.flows import (
    eta_flow_rhs,
    integrate,
    invariant_drift,
    solve_v,
    xi_flow_rhs,
)
from toda_tri.operator import TriangularOperator, random_operator


def band_coefficients(C, n, k):
    """Read the coefficients of a banded periodic matrix back as (n, k + 2) by band 0..k+1."""
    N = C.shape[0]
    out = np.zeros((n, k + 2), dtype=complex)
    for i in range(1, n + 1):
        for j in range(k + 2):
            out[i - 1, j] = C[i % N, (i - j) % N]
    return out


def commutator_rhs(L, M):
    A = dense_operator(L, 3 * L.n)
    C = M @ A - A @ M
    return band_coefficients(C, L.n, L.k)


def periodic_diag(values, N):
    n = len(values)
    return np.diag([values[(i - 1) % n] for i in range(N)])


@pytest.mark.parametrize("L", operators(10), ids=lambda L: f"n{L.n}k{L.k}")
def test_xi_rhs_is_commutator(L):
    N = 3 * L.n
    M = periodic_diag(solve_v(L), N) + np.roll(np.eye(N), -1, axis=1)
    C = commutator_rhs(L, M)
    assert np.allclose(C[:, 0], 0) and np.allclose(C[:, L.k + 1], 0)
    assert np.allclose(C[:, 1 : L.k + 1], xi_flow_rhs(L))


@pytest.mark.parametrize("L", operators(10), ids=lambda L: f"n{L.n}k{L.k}")
def test_eta_rhs_is_commutator(L):
    N = 3 * L.n
    c = 1.0 / np.roll(L.a[:, 0], -1)
    M = periodic_diag(c, N) @ np.roll(np.eye(N), 1, axis=1)
    C = commutator_rhs(L, M)
    assert np.allclose(C[:, 0], 0) and np.allclose(C[:, L.k + 1], 0)
    assert np.allclose(C[:, 1 : L.k + 1], eta_flow_rhs(L))


def test_solve_v_example():
    L = TriangularOperator(3, 1, np.array([[2.0], [1.0], [1.0]]))
    assert np.allclose(solve_v(L), [1 / 3, -2 / 3, 1 / 3])


@pytest.mark.parametrize("L", operators(6), ids=lambda L: f"n{L.n}k{L.k}")
def test_solve_v_constraint(L):
    v = solve_v(L)
    ak = L.a[:, L.k - 1]
    assert np.allclose(v - np.roll(v, L.k + 1), ak - np.roll(ak, 1))
    assert abs(v.mean()) < 1e-14


def test_trivial_operator_is_fixed(trivial):
    for flow in ("xi", "eta"):
        traj = integrate(trivial, flow, 1.0, 0.1)
        assert np.allclose(traj.states[-1], trivial.a)
        assert max(invariant_drift(traj).values()) < 1e-14


@pytest.mark.parametrize("flow", ["xi", "eta"])
@pytest.mark.parametrize("L", operators(4, shapes=[(5, 1), (7, 2)], range=(0.8, 1.2), sym=0.3),
                         ids=lambda L: f"n{L.n}k{L.k}")
def test_conservation(L, flow):
    traj = integrate(L, flow, 1.0, 1e-3, monitor_every=250)
    assert max(invariant_drift(traj).values()) < 1e-8


def test_rk4_fourth_order():
    L = random_operator(5, 2, 3, range=(0.8, 1.2), sym=0.3)
    ends = [integrate(L, "xi", 0.5, dt, monitor_every=10**6).states[-1] for dt in (0.05, 0.025, 0.0125)]
    ratio = np.max(np.abs(ends[0] - ends[1])) / np.max(np.abs(ends[1] - ends[2]))
    assert 14 < ratio < 18


def test_euler_first_order():
    L = random_operator(5, 1, 3, range=(0.8, 1.2))
    ends = [integrate(L, "eta", 0.5, dt, "euler", monitor_every=10**6).states[-1] for dt in (0.01, 0.005, 0.0025)]
    ratio = np.max(np.abs(ends[0] - ends[1])) / np.max(np.abs(ends[1] - ends[2]))
    assert 1.8 < ratio < 2.2


def test_halving_dt_does_not_increase_drift():
    L = random_operator(5, 1, 11, range=(0.8, 1.2))
    d1 = max(invariant_drift(integrate(L, "xi", 1.0, 2e-3, monitor_every=100)).values())
    d2 = max(invariant_drift(integrate(L, "xi", 1.0, 1e-3, monitor_every=200)).values())
    assert d2 <= 2 * d1 + 1e-15


def test_blow_up_reports_last_time():
    L = TriangularOperator(5, 1, np.array([1.0, -1.0, 1.0, 1.0, 1.0])[:, None])
    with pytest.raises(InvalidStateError) as info:
        integrate(L, "xi", 2.0, 1e-3)
    assert 0.5 < info.value.last_time < 1.0
    assert info.value.exit_code == 5


def test_bad_arguments(trivial):
    with pytest.raises(ValueError):
        integrate(trivial, "xi", 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate(trivial, "xi", 1.0, 0.1, scheme="leapfrog")
