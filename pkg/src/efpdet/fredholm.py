"""Nyström discretisation of det(I + V) for the emptiness-formation kernel.

    V(z1, z2) = -gamma i/(2 pi) [e+(z1) e-(z2) r(z1,z2) - e-(z1) e+(z2) r(z2,z1)] / (z1 - z2)

acts on functions on the arc by ``int_C V(z1, z2) f(z2) dz2``. The Nyström
matrix is ``M[j, k] = delta_jk + V(z_j, z_k) w_k`` with complex contour weights
``w_k``; one-sided weighting is a similarity of the symmetric split and keeps
the determinant.

Determinants of interest are as small as exp(-300), so the kernel and the
elimination run in long double by default. Where long double runs out
(roughly log P < -100) the same scheme can run in gmpy2 multiprecision.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import gmpy2
import numpy as np

from .contour import (
    CLD,
    LD,
    PI_LD,
    ArcQuadrature,
    HalfLineQuadrature,
    ModelParams,
    build_arc,
)
from .errors import DomainError, SingularMatrixError
from .opkernels import FINITE_RANK_SCALE, R_DENOM_TOL, e_pm_s

log = logging.getLogger(__name__)

PAIR_TOL = 1e-12
CONVERGENCE_TOL = 1e-8
ARG_TOL = 1e-6
PIVOT_FLOOR = 1e-12


def _pi_for(dtype):
    return PI_LD if np.dtype(dtype) in (np.dtype(LD), np.dtype(CLD)) else np.pi


def _prefactor(params: ModelParams, dtype=complex):
    return -params.gamma * 1j / (2 * _pi_for(dtype))


def _epm_on_arc(theta, params: ModelParams):
    """e+ and e- at arc angles, computed in the dtype of ``theta``."""
    theta = np.asarray(theta)
    cdt = np.result_type(theta, 1j)
    z = np.exp(1j * theta.astype(cdt))
    expo = -0.5j * params.n * theta.astype(cdt) + params.phi(z) / 2
    ep = np.exp(expo)
    return z, ep, 1 / ep


def _r_matrix(Z1, Z2):
    num = 2 * (Z2 - 1) * (Z1 - 1)
    den = num + Z1 - Z2
    small = np.abs(den) < R_DENOM_TOL
    if np.any(small):
        j, k = np.argwhere(small)[0]
        raise DomainError(f"r denominator vanishes at node pair ({j}, {k})")
    return num / den


def v_kernel(theta1, theta2, params: ModelParams):
    """Off-diagonal kernel value(s); broadcasts over ``theta1`` and ``theta2``."""
    theta1, theta2 = np.broadcast_arrays(np.asarray(theta1), np.asarray(theta2))
    z1, ep1, em1 = _epm_on_arc(theta1, params)
    z2, ep2, em2 = _epm_on_arc(theta2, params)
    dz = z1 - z2
    if np.any(np.abs(dz) < PAIR_TOL):
        raise DomainError("coincident arc points: use v_diagonal for the diagonal limit")
    bracket = ep1 * em2 * _r_matrix(z1, z2) - em1 * ep2 * _r_matrix(z2, z1)
    return _prefactor(params, dz.dtype) * bracket / dz


def v_diagonal(theta, params: ModelParams):
    """Limit of the kernel on the diagonal.

    Expanding the bracket to first order in ``z1 - z`` at ``z2 = z`` gives
    ``phi'(z) - n/z`` from the exponentials and ``-1/(z - 1)**2`` from the two
    r factors, so ``V(z, z) = -gamma i/(2 pi) [phi'(z) - n/z - 1/(z-1)**2]``.
    """
    theta = np.asarray(theta)
    cdt = np.result_type(theta, 1j)
    z = np.exp(1j * theta.astype(cdt))
    return _prefactor(params, cdt) * (params.dphi(z) - params.n / z - 1 / (z - 1) ** 2)


def kernel_matrix(params: ModelParams, aq: ArcQuadrature) -> np.ndarray:
    """Kernel sampled at all node pairs, diagonal filled by the limit."""
    th = aq.theta_nodes
    z, ep, em = _epm_on_arc(th, params)
    Z1, Z2 = z[:, None], z[None, :]
    dz = Z1 - Z2
    np.fill_diagonal(dz, 1)
    bracket = ep[:, None] * em[None, :] * _r_matrix(Z1, Z2) - em[:, None] * ep[None, :] * _r_matrix(Z2, Z1)
    V = _prefactor(params, z.dtype) * bracket / dz
    np.fill_diagonal(V, v_diagonal(th, params))
    return V


def assemble(params: ModelParams, aq: ArcQuadrature) -> np.ndarray:
    """Nyström matrix of ``I + V`` built from the closed-form kernel."""
    V = kernel_matrix(params, aq)
    return np.eye(aq.node_count, dtype=V.dtype) + V * aq.contour_weights[None, :]


def assemble_finite_rank(params: ModelParams, aq: ArcQuadrature, hq: HalfLineQuadrature) -> np.ndarray:
    """Nyström matrix of ``I + V`` with V written as an s-integral of rank-two kernels.

    ``V(z1,z2) = -gamma i/(2 pi) sum_k W_k [E+(z1|s_k) E-(z2|s_k) - E-(z1|s_k) E+(z2|s_k)] / (z1 - z2)``
    where ``E+-`` are :func:`efpdet.opkernels.e_pm_s` with the Cayley term
    at ``FINITE_RANK_SCALE``. This is the factored form of the closed-form
    kernel, including its ``1/(z1 - z2)``.
    """
    z = aq.z_nodes.astype(complex)
    s = hq.s_nodes
    # (m, k) tables of E+- at arc node m and half-line node k
    Ep = e_pm_s(z[:, None], s[None, :], +1, params, scale=FINITE_RANK_SCALE)
    Em = e_pm_s(z[:, None], s[None, :], -1, params, scale=FINITE_RANK_SCALE)
    W = hq.weights
    bracket = (Ep * W) @ Em.T - (Em * W) @ Ep.T
    dz = z[:, None] - z[None, :]
    np.fill_diagonal(dz, 1)
    V = _prefactor(params) * bracket / dz
    np.fill_diagonal(V, v_diagonal(aq.theta_nodes.astype(float), params))
    V = V.astype(aq.contour_weights.dtype)
    return np.eye(aq.node_count, dtype=V.dtype) + V * aq.contour_weights[None, :]


@dataclass
class LogDet:
    """Logarithm of a determinant: ``det = exp(log_abs + i arg)``."""

    log_abs: float
    arg: float
    min_pivot: float
    converged: bool = True
    node_count: int = 0
    delta: float = 0.0
    diagnostics: list[str] = field(default_factory=list)

    @property
    def trusted(self) -> bool:
        return self.min_pivot > PIVOT_FLOOR

    @property
    def real_positive(self) -> bool:
        return abs(self.arg) < ARG_TOL


def logdet(m: np.ndarray) -> LogDet:
    """Gaussian elimination with partial pivoting, in the dtype of ``m``.

    The log-modulus is summed over pivots; the argument accumulates pivot
    phases plus ``pi`` per row swap and is wrapped to ``(-pi, pi]``.
    """
    a = np.array(m, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"logdet needs a square matrix, got shape {a.shape}")
    if not np.iscomplexobj(a):
        a = a.astype(np.result_type(a, 1j))
    size = a.shape[0]
    pi = _pi_for(a.dtype)
    log_abs = np.real(a.dtype.type(0))
    arg = np.real(a.dtype.type(0))
    min_pivot = np.inf
    for k in range(size):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if p != k:
            a[[k, p]] = a[[p, k]]
            arg += pi
        piv = a[k, k]
        mod = np.abs(piv)
        if mod == 0:
            raise SingularMatrixError(f"zero pivot at step {k}")
        log_abs += np.log(mod)
        arg += np.angle(piv)
        min_pivot = min(min_pivot, float(mod))
        if k + 1 < size:
            a[k + 1:, k] /= piv
            a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:])
    wrapped = float(np.mod(arg + pi, 2 * pi) - pi)
    if wrapped == -float(np.pi):
        wrapped = float(np.pi)
    return LogDet(log_abs=float(log_abs), arg=wrapped, min_pivot=min_pivot, node_count=size)


# ------------------------------------------------------------ multiprecision

_mp_exp = np.frompyfunc(gmpy2.exp, 1, 1)


def _gauss_legendre_mp(m: int):
    x0, _ = np.polynomial.legendre.leggauss(m)
    x = np.array([gmpy2.mpfr(float(v)) for v in x0], dtype=object)

    def pdp(x):
        p0 = np.array([gmpy2.mpfr(1)] * m, dtype=object)
        p1 = x.copy()
        for k in range(2, m + 1):
            p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
        return p1, m * (x * p1 - p0) / (x * x - 1)

    # float64 start is good to ~1e-16; each Newton step doubles the digits
    steps = max(2, int(np.ceil(np.log2(gmpy2.get_context().precision / 50))) + 1)
    for _ in range(steps):
        p, dp = pdp(x)
        x = x - p / dp
    _, dp = pdp(x)
    return x, 2 / ((1 - x * x) * dp * dp)


def assemble_mp(params: ModelParams, m: int, panels: int = 1) -> np.ndarray:
    """Object array of gmpy2 ``mpc`` values: the Nyström matrix at the current gmpy2 precision."""
    if m < 2 or panels < 1 or m % panels:
        raise DomainError(f"bad node layout: m={m}, panels={panels}")
    x, w = _gauss_legendre_mp(m // panels)
    pi = gmpy2.const_pi()
    lo, hi = -gmpy2.mpfr(params.psi), 2 * pi + gmpy2.mpfr(params.psi)
    edges = [lo + (hi - lo) * k / panels for k in range(panels + 1)]
    th = np.concatenate([(b - a) / 2 * x + (a + b) / 2 for a, b in zip(edges[:-1], edges[1:])])
    wt = np.concatenate([(b - a) / 2 * w for a, b in zip(edges[:-1], edges[1:])])
    i = gmpy2.mpc(0, 1)
    z = _mp_exp(i * th)
    ep = _mp_exp(-i * params.n * th / 2 + params.phi(z) / 2)
    em = 1 / ep
    Z1, Z2 = z[:, None], z[None, :]
    dz = Z1 - Z2
    np.fill_diagonal(dz, 1)
    num = 2 * (Z1 - 1) * (Z2 - 1)
    pref = -params.gamma * i / (2 * pi)
    V = pref * (ep[:, None] * em[None, :] * num / (num + dz) - em[:, None] * ep[None, :] * num / (num - dz)) / dz
    np.fill_diagonal(V, pref * (params.dphi(z) - params.n / z - 1 / (z - 1) ** 2))
    M = V * (wt * i * z)[None, :]
    for k in range(m):
        M[k, k] += 1
    return M


def logdet_mp(m: np.ndarray) -> LogDet:
    """Pivoted elimination on an object array of gmpy2 numbers."""
    a = np.array(m, dtype=object, copy=True)
    size = a.shape[0]
    pi = gmpy2.const_pi()
    log_abs = gmpy2.mpfr(0)
    arg = gmpy2.mpfr(0)
    min_pivot = np.inf
    for k in range(size):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if p != k:
            a[[k, p]] = a[[p, k]]
            arg += pi
        piv = a[k, k]
        mod = abs(piv)
        if mod == 0:
            raise SingularMatrixError(f"zero pivot at step {k}")
        log_abs += gmpy2.log(mod)
        arg += gmpy2.phase(piv)
        min_pivot = min(min_pivot, float(mod))
        if k + 1 < size:
            a[k + 1:, k] /= piv
            a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:])
    wrapped = float(gmpy2.fmod(gmpy2.fmod(arg + pi, 2 * pi) + 2 * pi, 2 * pi) - pi)
    return LogDet(log_abs=float(log_abs), arg=wrapped, min_pivot=min_pivot, node_count=size)


def _mp_logdet_at(params: ModelParams, m: int, panels: int, bits: int) -> LogDet:
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        return logdet_mp(assemble_mp(params, m, panels))


ESCALATION_BITS = 256


def fredholm_logdet(params: ModelParams, m_nodes: int = 64, panels: int = 1,
                    dtype=LD, bits: int | None = None, escalate: bool = True) -> LogDet:
    """``log det(I + V)`` at ``2 m_nodes``, with a node-doubling convergence test.

    ``converged`` means the ``m_nodes`` and ``2 m_nodes`` values of ``log|det|``
    differ by less than ``CONVERGENCE_TOL``. A non-real result or a pivot
    below ``PIVOT_FLOOR`` is recorded in ``diagnostics``, never raised.
    ``bits`` switches to gmpy2 arithmetic at that many mantissa bits. With
    ``escalate`` a fixed-precision result that fails the doubling test is
    recomputed once at ``ESCALATION_BITS``.
    """
    if bits is not None:
        coarse = _mp_logdet_at(params, m_nodes, panels, bits)
        fine = _mp_logdet_at(params, 2 * m_nodes, panels, bits)
    else:
        coarse = logdet(assemble(params, build_arc(params.psi, m_nodes, panels, dtype)))
        fine = logdet(assemble(params, build_arc(params.psi, 2 * m_nodes, panels, dtype)))
    fine.delta = abs(fine.log_abs - coarse.log_abs)
    fine.converged = fine.delta < CONVERGENCE_TOL
    if not fine.converged and escalate and bits is None:
        log.info("n=%d psi=%g: doubling delta %.2e, retrying at %d bits",
                 params.n, params.psi, fine.delta, ESCALATION_BITS)
        retry = fredholm_logdet(params, m_nodes, panels, bits=ESCALATION_BITS)
        retry.diagnostics.insert(0, f"escalated to {ESCALATION_BITS} bits (fixed-precision delta {fine.delta:.3e})")
        return retry
    fine.min_pivot = min(fine.min_pivot, coarse.min_pivot)
    if not fine.converged:
        fine.diagnostics.append(f"node doubling changed log|det| by {fine.delta:.3e}")
    if params.gamma > 0 and not fine.real_positive:
        msg = f"determinant is not real positive: arg = {fine.arg:.3e}"
        fine.diagnostics.append(msg)
        log.warning("n=%d psi=%g: %s", params.n, params.psi, msg)
    if not fine.trusted:
        fine.diagnostics.append(f"min pivot {fine.min_pivot:.3e} below {PIVOT_FLOOR:g}")
    return fine
