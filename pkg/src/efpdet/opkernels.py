"""Operator-valued ingredients acting on L^2[0, inf).

Kernels are functions of a spectral point ``z`` and half-line variables
``s, t``. They broadcast over numpy arrays. On a half-line grid an integral
operator with kernel ``K`` is represented by the symmetrised matrix
``A[j, k] = sqrt(w_j) K(s_j, s_k) sqrt(w_k)``, so operator products are
matrix products and adjoints are conjugate transposes.
"""
from __future__ import annotations

import numpy as np

from .contour import HalfLineQuadrature, ModelParams
from .errors import DivergentIntegralError, DomainError, KernelRangeError, SingularPointError

SINGULAR_TOL = 1e-14
R_DENOM_TOL = 1e-10
EXP_LIMIT = 700.0

# The s-integral form of r reproduces the closed form only with the Cayley
# term halved relative to e_+-(z|s); see r_integral.
FINITE_RANK_SCALE = 0.5


def _as_complex(z):
    z = np.asarray(z)
    return z if np.iscomplexobj(z) else z.astype(complex)


def cayley_coefficient(z):
    """``c = (z + 1) / (2 (z - 1))``; purely imaginary on the unit circle."""
    z = _as_complex(z)
    if np.any(np.abs(z - 1) < SINGULAR_TOL):
        raise SingularPointError("z = 1 is an essential singularity of the kernels")
    return (z + 1) / (2 * (z - 1))


def _sign(sign) -> int:
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise DomainError(f"sign must be +1 or -1, got {sign!r}")


def _theta_of(z):
    """Angle of ``z`` in [0, 2 pi): the determination used for half powers (cut on z > 0)."""
    return np.mod(np.angle(z), 2 * np.pi)


def e_pm(theta, sign, params: ModelParams):
    """``z**(-+n/2) exp(+-phi(z)/2)`` on the arc, half powers via theta."""
    sg = _sign(sign)
    theta = np.asarray(theta)
    z = np.exp(1j * theta)
    return np.exp(sg * (-0.5j * params.n * theta + params.phi(z) / 2))


def e_pm_s(z, s, sign, params: ModelParams, scale: float = 1.0):
    """``(z**-n exp(phi(z) + scale*s*(z+1)/(z-1)))**(+-1/2) exp(-s/2)``.

    ``scale=1`` is the plain s-dependent factor. The finite-rank assembly in
    :mod:`efpdet.fredholm` uses ``scale=FINITE_RANK_SCALE``.
    """
    sg = _sign(sign)
    z = _as_complex(z)
    s = np.asarray(s)
    c = cayley_coefficient(z)
    log_z = np.log(np.abs(z)) + 1j * _theta_of(z)
    expo = -params.n * log_z + params.phi(z) + 2 * scale * s * c
    return np.exp(sg * expo / 2 - s / 2)


def p_kernel(z, s, t):
    """``P(z|s,t) = exp[(s - t) c - (s + t)/2]``."""
    c = cayley_coefficient(z)
    s, t = np.asarray(s), np.asarray(t)
    return np.exp((s - t) * c - (s + t) / 2)


def q_kernel(z, s, t):
    """``Q(z|s,t) = exp[(s + t) c - (s + t)/2]``; raises instead of overflowing."""
    c = cayley_coefficient(z)
    s, t = np.asarray(s), np.asarray(t)
    if np.any(np.real(c) * (s + t) > EXP_LIMIT):
        raise KernelRangeError(
            f"Q(z|s,t) overflows at z={z!r}: Re c = {np.real(c):.3g} is outside its decay region"
        )
    return np.exp((s + t) * (c - 0.5))


def r_closed(z1, z2):
    """``r(z1, z2) = 2(z2-1)(z1-1) / (2(z2-1)(z1-1) + z1 - z2)``."""
    z1, z2 = _as_complex(z1), _as_complex(z2)
    num = 2 * (z2 - 1) * (z1 - 1)
    den = num + z1 - z2
    if np.any(np.abs(den) < R_DENOM_TOL):
        raise DomainError("r(z1, z2) denominator is numerically zero")
    return num / den


def r_exponent_rate(z1, z2):
    """Decay rate ``1 - (c1 - c2)/2`` of the s-integrand representing r_closed."""
    return 1 - FINITE_RANK_SCALE * (cayley_coefficient(z1) - cayley_coefficient(z2))


def r_integral(z1, z2, hq: HalfLineQuadrature):
    """Quadrature value of ``int_0^inf exp(-s + s (c1 - c2)/2) ds``, equal to r_closed.

    With the Cayley term at full strength the same integral equals
    ``(z1-1)(z2-1) / ((z1-1)(z2-1) + z1 - z2)`` instead, which is not r_closed.
    """
    rate = r_exponent_rate(z1, z2)
    if np.any(np.real(rate) <= 0):
        raise DivergentIntegralError("r integrand does not decay for this (z1, z2)")
    rate = np.asarray(rate)[..., None]
    return np.sum(hq.weights * np.exp(-rate * hq.s_nodes), axis=-1)


def p_range_vector(z, s):
    """``phi_z(s) = exp((c - 1/2) s)``: spans the range of P(z) on the circle."""
    c = cayley_coefficient(z)
    return np.exp((c - 0.5) * np.asarray(s))


def discretize(kernel, hq: HalfLineQuadrature) -> np.ndarray:
    """Symmetrised grid matrix of the integral operator with kernel ``kernel(s, t)``."""
    s = hq.s_nodes
    sw = np.sqrt(hq.weights)
    return sw[:, None] * kernel(s[:, None], s[None, :]) * sw[None, :]


def to_grid(f_values, hq: HalfLineQuadrature):
    """Grid coordinates ``sqrt(w_j) f(s_j)`` of a function sampled at the nodes."""
    return np.sqrt(hq.weights) * np.asarray(f_values)


def p_matrix(z, hq: HalfLineQuadrature) -> np.ndarray:
    return discretize(lambda s, t: p_kernel(z, s, t), hq)


def q_matrix(z, hq: HalfLineQuadrature) -> np.ndarray:
    return discretize(lambda s, t: q_kernel(z, s, t), hq)


def projection_identities(z, hq: HalfLineQuadrature) -> dict[str, float]:
    """Max-entry residuals of P^2 = P, P* = P, PQ = Q and Q(z)Q(1/z) = P."""
    P = p_matrix(z, hq)
    Q = q_matrix(z, hq)
    Qi = q_matrix(1 / z, hq)
    return {
        "P^2-P": float(np.max(np.abs(P @ P - P))),
        "P-P*": float(np.max(np.abs(P - P.conj().T))),
        "PQ-Q": float(np.max(np.abs(P @ Q - Q))),
        "Q(z)Q(1/z)-P": float(np.max(np.abs(Q @ Qi - P))),
    }
