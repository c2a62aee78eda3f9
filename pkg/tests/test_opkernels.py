from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import GaussQ, r_exact

from efpdet.contour import ModelParams, build_arc, build_halfline, interior_thetas
from efpdet.errors import DivergentIntegralError, DomainError, KernelRangeError, SingularPointError
from efpdet.opkernels import (
    cayley_coefficient,
    discretize,
    e_pm,
    e_pm_s,
    p_kernel,
    p_matrix,
    p_range_vector,
    projection_identities,
    q_kernel,
    q_matrix,
    r_closed,
    r_integral,
    to_grid,
)

HQ = build_halfline(64)
PSI = -np.pi / 2
arc_theta = st.floats(np.pi / 2 + 0.05, 3 * np.pi / 2 - 0.05)


# ---- Cayley coefficient and e_+-

@given(arc_theta)
def test_cayley_imaginary_on_circle(theta):
    c = cayley_coefficient(np.exp(1j * theta))
    assert abs((2 * c).real) < 1e-12


def test_cayley_singular_at_one():
    with pytest.raises(SingularPointError):
        cayley_coefficient(1.0)


def test_e_pm_examples():
    p0 = ModelParams(0, PSI)
    for th in (2.0, np.pi, 4.0):
        assert e_pm(th, +1, p0) == 1 and e_pm(th, -1, p0) == 1
    assert abs(e_pm(np.pi, +1, ModelParams(2, PSI)) - (-1)) < 1e-15


def test_e_pm_product_is_one():
    rng = np.random.default_rng(0)
    p = ModelParams(5, PSI, (0.2, 0.1 - 0.3j))
    th = rng.uniform(np.pi / 2, 3 * np.pi / 2, 20)
    assert np.max(np.abs(e_pm(th, "+", p) * e_pm(th, "-", p) - 1)) < 1e-14


def test_e_pm_s_examples():
    p = ModelParams(3, PSI, (0, 0.1))
    for th in (2.0, np.pi, 4.3):
        z = np.exp(1j * th)
        for sg in (+1, -1):
            assert abs(e_pm_s(z, 0.0, sg, p) - e_pm(th, sg, p)) < 1e-14
    z, s = -1.0 + 0j, 1.7
    for sg in (+1, -1):
        expect = e_pm(np.pi, sg, p) * np.exp(-s / 2)
        assert abs(e_pm_s(z, s, sg, p) - expect) < 1e-14


@given(arc_theta, st.floats(0, 30))
@settings(max_examples=50)
def test_e_pm_s_moduli(theta, s):
    p = ModelParams(4, PSI, (0.3, 0.2j))
    z = np.exp(1j * theta)
    prod = abs(e_pm_s(z, s, +1, p)) * abs(e_pm_s(z, s, -1, p))
    assert abs(prod - np.exp(-s)) < 1e-12 * max(1.0, np.exp(-s))


def test_e_pm_s_rejects_bad_sign_and_one():
    p = ModelParams(1, PSI)
    with pytest.raises(DomainError):
        e_pm_s(-1.0, 0.0, 2, p)
    with pytest.raises(SingularPointError):
        e_pm_s(1.0, 0.0, 1, p)


# ---- P and Q

@given(arc_theta, st.floats(0, 20), st.floats(0, 20))
@settings(max_examples=50)
def test_p_kernel_hermitian_on_circle(theta, s, t):
    z = np.exp(1j * theta)
    assert abs(p_kernel(z, s, t) - np.conj(p_kernel(z, t, s))) < 1e-14


def test_p_kernel_examples():
    z = np.exp(2.2j)
    for s in (0.0, 0.5, 3.0):
        assert abs(p_kernel(z, s, s) - np.exp(-s)) < 1e-15
    assert abs(p_kernel(-1.0, 0.4, 2.0) - np.exp(-1.2)) < 1e-15


def test_q_kernel_examples():
    z = 0.3 + 0.4j
    assert q_kernel(z, 0.0, 0.0) == 1
    assert abs(q_kernel(-1.0, 0.4, 2.0) - np.exp(-1.2)) < 1e-15
    assert q_kernel(z, 0.7, 2.5) == q_kernel(z, 2.5, 0.7)


def test_q_kernel_overflow_guard():
    z = 1.05  # Re c = 20.5 outside the decay region
    with pytest.raises(KernelRangeError):
        q_kernel(z, 20.0, 20.0)
    assert np.isfinite(q_kernel(z, 1.0, 1.0))


def test_kernels_singular_at_one():
    for k in (p_kernel, q_kernel):
        with pytest.raises(SingularPointError):
            k(1.0, 0.1, 0.2)


# ---- r

def test_r_closed_spot_value():
    exact = r_exact(GaussQ(-1), GaussQ(0, 1))
    assert exact.re == Fraction(16, 17) and exact.im == Fraction(4, 17)
    assert abs(r_closed(-1.0, 1j) - complex(exact)) < 1e-15


@given(arc_theta)
def test_r_closed_diagonal(theta):
    z = np.exp(1j * theta)
    assert abs(r_closed(z, z) - 1) < 1e-15


def test_r_denominator_bounded_on_half_circle():
    z = build_arc(PSI, 64).z_nodes.astype(complex)
    Z1, Z2 = z[:, None], z[None, :]
    den = 2 * (Z2 - 1) * (Z1 - 1) + Z1 - Z2
    assert np.min(np.abs(den)) >= 2 - 1e-12
    assert np.all(np.isfinite(r_closed(Z1, Z2)))


def test_r_closed_rejects_vanishing_denominator():
    # 2(z2-1)(z1-1) + z1 - z2 = 0 at z1 = 0, z2 = 2/3
    with pytest.raises(DomainError):
        r_closed(0.0, 2 / 3)


def test_r_integral_examples():
    z = np.exp(2.5j)
    assert abs(r_integral(z, z, HQ) - 1) < 1e-10
    assert abs(r_integral(-1.0, 1j, HQ) - (16 + 4j) / 17) < 1e-8


def test_r_integral_random_pairs():
    rng = np.random.default_rng(11)
    th1, th2 = rng.uniform(np.pi / 2, 3 * np.pi / 2, (2, 50))
    z1, z2 = np.exp(1j * th1), np.exp(1j * th2)
    assert np.max(np.abs(r_integral(z1, z2, HQ) - r_closed(z1, z2))) < 1e-8


def test_r_integral_divergence():
    # 1 - (c1 - c2)/2 has negative real part for z1 just outside 1
    with pytest.raises(DivergentIntegralError):
        r_integral(1.01, -1.0, HQ)


# ---- range of P

def test_range_vector_is_fixed_by_p():
    for th in (2.0, np.pi, 4.0):
        z = np.exp(1j * th)
        v = to_grid(p_range_vector(z, HQ.s_nodes), HQ)
        assert np.max(np.abs(p_matrix(z, HQ) @ v - v)) < 1e-8


def test_q_acts_as_scalar_on_range():
    for th in (2.0, np.pi, 4.0):
        z = np.exp(1j * th)
        v = to_grid(p_range_vector(z, HQ.s_nodes), HQ)
        assert np.max(np.abs(q_matrix(z, HQ) @ v - (1 - z) / 2 * v)) < 1e-8


def test_p_annihilates_orthogonal_complement():
    z = np.exp(2.4j)
    c = cayley_coefficient(z)
    s = HQ.s_nodes
    u1 = np.exp((np.conj(c) - 0.5) * s)
    u2 = np.exp((c - 0.5) * s)
    phi = p_range_vector(z, s)

    def inner(f, g):
        return np.sum(HQ.weights * np.conj(f) * g)

    # psi = a u1 + b u2 with <phi, psi> = 0 by quadrature
    a = 1.0
    b = -a * inner(phi, u1) / inner(phi, u2)
    psi = a * u1 + b * u2
    assert abs(inner(phi, psi)) < 1e-12
    out = p_matrix(z, HQ) @ to_grid(psi, HQ)
    assert np.max(np.abs(out)) < 1e-8


def test_discretize_symmetrised():
    A = discretize(lambda s, t: np.exp(-(s + t)), HQ)
    assert np.allclose(A, A.T)
    # rank one: e^{-s} e^{-t}, trace = int e^{-2s} ds = 1/2
    assert abs(np.trace(A) - 0.5) < 1e-12


# ---- operator identities

def test_projection_identities_on_arc():
    worst = {}
    for th in interior_thetas(PSI, 20):
        for key, val in projection_identities(np.exp(1j * th), HQ).items():
            worst[key] = max(worst.get(key, 0.0), val)
    assert worst["P^2-P"] < 1e-8
    assert worst["P-P*"] < 1e-10
    assert worst["PQ-Q"] < 1e-8
    assert worst["Q(z)Q(1/z)-P"] < 1e-8


def test_inverse_point_flips_cayley():
    z = np.exp(2.0j)
    assert abs(cayley_coefficient(1 / z) + cayley_coefficient(z)) < 1e-14


def test_identities_degrade_near_one():
    # measured, no claim of convergence as z -> 1
    near = projection_identities(np.exp(0.02j), HQ)
    assert all(np.isfinite(v) for v in near.values())
