import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from oracles import GaussQ, r_exact

from efpdet.contour import ModelParams, build_arc, build_halfline, interior_thetas
from efpdet.errors import DomainError, SingularMatrixError
from efpdet.fredholm import (
    CONVERGENCE_TOL,
    assemble,
    assemble_finite_rank,
    fredholm_logdet,
    kernel_matrix,
    logdet,
    v_diagonal,
    v_kernel,
)

PSI = -np.pi / 2
HQ = build_halfline(64)
# log det(I + V) for psi = -pi/2, n = 0, phi = 0, captured at 256/512 nodes
REFERENCE_N0 = 0.148485485850358


def cofactor_det(a):
    n = a.shape[0]
    if n == 1:
        return a[0, 0]
    return sum((-1) ** j * a[0, j] * cofactor_det(np.delete(a[1:], j, axis=1)) for j in range(n))


def richardson_limit(theta, params, steps=(1e-5, 1e-6, 1e-7)):
    # V(theta, theta + h) = V0 + V1 h + O(h^2): extrapolate each neighbouring pair, then again
    vals = [complex(v_kernel(theta, theta + h, params)) for h in steps]
    ratio = steps[0] / steps[1]
    first = [(ratio * vals[i + 1] - vals[i]) / (ratio - 1) for i in range(len(vals) - 1)]
    return (ratio ** 2 * first[1] - first[0]) / (ratio ** 2 - 1)


# ---- kernel

def test_kernel_gamma_zero():
    p = ModelParams(3, PSI, gamma=0.0)
    assert v_kernel(2.0, 3.0, p) == 0
    assert v_diagonal(2.5, p) == 0


@given(st.floats(1.6, 4.6), st.floats(1.6, 4.6), st.integers(0, 9))
@settings(max_examples=60, deadline=None)
def test_kernel_exchange_symmetry(t1, t2, n):
    # the bracket and z1 - z2 both change sign under exchange
    if abs(t1 - t2) < 1e-3:
        return
    p = ModelParams(n, PSI, (0, 0.1))
    a, b = complex(v_kernel(t1, t2, p)), complex(v_kernel(t2, t1, p))
    assert abs(a - b) < 1e-12 * max(1.0, abs(a))


def test_kernel_spot_value_exact():
    z1, z2 = GaussQ(-1), GaussQ(0, 1)
    diff = r_exact(z1, z2) - r_exact(z2, z1)
    bracket_over_dz = diff / (z1 - z2)
    # theta = pi, pi/2 are the points z = -1, i; with n = 0 the e-factors are 1
    expect = -1j / (2 * np.pi) * complex(bracket_over_dz)
    got = complex(v_kernel(np.pi, np.pi / 2, ModelParams(0, PSI)))
    assert abs(got - expect) < 1e-15


def test_kernel_rejects_coincident_points():
    with pytest.raises(DomainError):
        v_kernel(2.0, 2.0 + 1e-14, ModelParams(1, PSI))


def test_diagonal_example_value():
    got = complex(v_diagonal(np.pi, ModelParams(0, PSI)))
    assert abs(got - 1j / (8 * np.pi)) < 1e-15
    assert abs(richardson_limit(np.pi, ModelParams(0, PSI)) - got) / abs(got) < 1e-6


@pytest.mark.parametrize("n,coeffs", [(0, ()), (4, ()), (3, (0, 0.1))])
def test_diagonal_matches_numerical_limit(n, coeffs):
    p = ModelParams(n, PSI, coeffs)
    for th in interior_thetas(PSI, 20):
        exact = complex(v_diagonal(th, p))
        assert abs(richardson_limit(th, p) - exact) / abs(exact) < 1e-6
        assert abs(complex(v_kernel(th, th + 1e-6, p)) - exact) < 1e-4 * (1 + abs(exact))


def test_kernel_matrix_finite_up_to_n24():
    aq = build_arc(PSI, 64)
    for n in (0, 8, 16, 24):
        V = kernel_matrix(ModelParams(n, PSI), aq) * aq.contour_weights[None, :]
        assert np.all(np.isfinite(V.astype(complex)))
        assert np.max(np.abs(V)) < 1e3


# ---- assembly

def test_assemble_gamma_zero_is_identity():
    aq = build_arc(PSI, 32)
    p = ModelParams(4, PSI, gamma=0.0)
    assert np.array_equal(assemble(p, aq), np.eye(32))
    assert np.array_equal(assemble_finite_rank(p, aq, HQ), np.eye(32))


@pytest.mark.parametrize("n", [0, 4])
def test_finite_rank_entrywise(n):
    aq = build_arc(PSI, 64)
    p = ModelParams(n, PSI)
    diff = assemble(p, aq).astype(complex) - assemble_finite_rank(p, aq, HQ).astype(complex)
    assert np.max(np.abs(diff)) < 1e-7
    assert abs(logdet(assemble(p, aq)).log_abs - logdet(assemble_finite_rank(p, aq, HQ)).log_abs) < 1e-7


def test_finite_rank_with_phi_odd_n():
    aq = build_arc(-2.2, 64)
    p = ModelParams(5, -2.2, (0, 0.1))
    diff = assemble(p, aq).astype(complex) - assemble_finite_rank(p, aq, HQ).astype(complex)
    assert np.max(np.abs(diff)) < 1e-7


def test_node_doubling_n4():
    p = ModelParams(4, PSI)
    a = logdet(assemble(p, build_arc(PSI, 64))).log_abs
    b = logdet(assemble(p, build_arc(PSI, 128))).log_abs
    assert abs(a - b) < 1e-8


# ---- Toeplitz oracle
# With r replaced by 1 the kernel becomes the discrete sine kernel on the arc
# and det(I + V) is the n x n Toeplitz determinant of the indicator of the
# complementary arc (-alpha, alpha), alpha = -psi. Both sides reach e^-60,
# so the oracle runs in mpmath and the Nystrom side in long double.

def nystrom_r1(n, psi, m):
    aq = build_arc(psi, m)
    th, z = aq.theta_nodes, aq.z_nodes
    pi = np.arccos(np.longdouble(-1))
    ep = np.exp(-0.5j * n * th.astype(np.clongdouble))
    em = 1 / ep
    dz = z[:, None] - z[None, :]
    np.fill_diagonal(dz, 1)
    V = -1j / (2 * pi) * (ep[:, None] * em[None, :] - em[:, None] * ep[None, :]) / dz
    np.fill_diagonal(V, -1j / (2 * pi) * (-n / z))
    return logdet(np.eye(m) + V * aq.contour_weights[None, :]).log_abs


def toeplitz_logdet(n, psi):
    with mpmath.workdps(50):
        alpha = -mpmath.mpf(psi)
        c = [alpha / mpmath.pi] + [mpmath.sin(k * alpha) / (mpmath.pi * k) for k in range(1, n)]
        T = mpmath.matrix([[c[abs(j - k)] for k in range(n)] for j in range(n)])
        return float(mpmath.log(mpmath.det(T)))


@pytest.mark.parametrize("psi", [-0.8, -np.pi / 2, -2.2])
@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_nystrom_matches_toeplitz_for_unit_r(psi, n):
    assert abs(nystrom_r1(n, psi, 128) - toeplitz_logdet(n, psi)) < 1e-10


# ---- log det engine

def test_logdet_trivial():
    ld = logdet(np.eye(5))
    assert ld.log_abs == 0 and ld.arg == 0
    ld = logdet(np.diag([2.0, 0.5]))
    assert abs(ld.log_abs) < 1e-16 and ld.arg == 0


def test_logdet_row_swap_sign():
    ld = logdet(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert abs(ld.log_abs) < 1e-16 and abs(ld.arg - np.pi) < 1e-15


@given(st.integers(0, 2 ** 31))
@settings(max_examples=40)
def test_logdet_matches_cofactor(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    d = cofactor_det(a)
    ld = logdet(a)
    assert abs(np.exp(ld.log_abs + 1j * ld.arg) - d) < 1e-12 * max(1.0, abs(d))


def test_logdet_matches_cofactor_5x5():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    ld = logdet(a)
    assert abs(np.exp(ld.log_abs + 1j * ld.arg) - cofactor_det(a)) < 1e-11


def test_logdet_extended_precision():
    a = np.eye(3, dtype=np.clongdouble) * np.clongdouble(1e-200)
    assert abs(logdet(a).log_abs - 3 * math.log(1e-200)) < 1e-10


def test_logdet_errors():
    with pytest.raises(SingularMatrixError):
        logdet(np.zeros((2, 2)))
    with pytest.raises(DomainError):
        logdet(np.ones((2, 3)))


# ---- full determinant

def test_fredholm_gamma_zero_exact():
    ld = fredholm_logdet(ModelParams(6, PSI, gamma=0.0), 32)
    assert ld.log_abs == 0.0 and ld.arg == 0.0


def test_fredholm_regression_n0():
    ld = fredholm_logdet(ModelParams(0, PSI), 64)
    assert abs(ld.log_abs - REFERENCE_N0) < 1e-13
    assert ld.converged and ld.trusted and ld.real_positive


def test_fredholm_decreasing_in_n():
    vals = [fredholm_logdet(ModelParams(n, PSI), 64).log_abs for n in range(13)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("psi", [-0.8, -np.pi / 2, -2.2])
def test_fredholm_self_convergence_to_n16(psi):
    for n in range(17):
        ld = fredholm_logdet(ModelParams(n, psi), 64)
        assert ld.delta < CONVERGENCE_TOL, (n, ld.diagnostics)
        assert abs(ld.arg) < 1e-6
        assert ld.min_pivot > 1e-12


def test_fredholm_escalates_when_long_double_runs_out():
    ld = fredholm_logdet(ModelParams(14, -0.8), 64)
    assert ld.converged and ld.diagnostics and "escalated" in ld.diagnostics[0]
    plain = fredholm_logdet(ModelParams(14, -0.8), 64, escalate=False)
    assert not plain.converged


def test_multiprecision_agrees_with_long_double():
    p = ModelParams(7, PSI, (0, 0.1))
    a = fredholm_logdet(p, 32, bits=128)
    b = fredholm_logdet(p, 32)
    assert abs(a.log_abs - b.log_abs) < 1e-12
    assert abs(a.arg) < 1e-6


def test_phi_dependence_subquadratic():
    n = np.arange(13)
    plain = np.array([fredholm_logdet(ModelParams(k, PSI), 64).log_abs for k in n])
    tilted = np.array([fredholm_logdet(ModelParams(k, PSI, (0, 0.1)), 64).log_abs for k in n])
    quad = np.polyfit(n[4:], (tilted - plain)[4:], 2)[0]
    leading = math.log(abs(math.sin(PSI / 2)))
    assert abs(quad) < 0.01 * abs(leading)


def test_panels_give_same_determinant():
    p = ModelParams(6, -2.2)
    one = logdet(assemble(p, build_arc(-2.2, 64))).log_abs
    two = logdet(assemble(p, build_arc(-2.2, 64, panels=2))).log_abs
    assert abs(one - two) < 1e-10


def test_diagnostics_when_not_converged():
    ld = fredholm_logdet(ModelParams(10, PSI), 4, escalate=False)
    assert not ld.converged
    assert any("node doubling" in d for d in ld.diagnostics)


def test_nodes_pairs_iterate_all():
    # every off-diagonal entry of the kernel matrix equals v_kernel
    aq = build_arc(-2.2, 8)
    p = ModelParams(3, -2.2, (0.1,))
    K = kernel_matrix(p, aq).astype(complex)
    th = aq.theta_nodes.astype(float)
    for j, k in itertools.permutations(range(8), 2):
        assert abs(K[j, k] - complex(v_kernel(th[j], th[k], p))) < 1e-12 * max(1, abs(K[j, k]))
