"""Jump matrices and explicit solutions along the steepest-descent chain.

Operator-valued jumps are represented on a half-line grid (see
:mod:`efpdet.opkernels`), where delta-function blocks become the identity
matrix. On the range of P(z) everything reduces to scalars:
``Q(z) -> (1 - z)/2`` and ``Q(1/z) -> 2/(1 - z)``, so the jumps there are plain
2x2 complex matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .branches import BranchContext, beta_fn, g_fn
from .contour import HalfLineQuadrature, ModelParams, richardson_boundary
from .errors import DomainError, SingularPointError
from .opkernels import p_kernel, p_matrix, q_kernel, q_matrix

POLE_TOL = 1e-8


@dataclass(frozen=True)
class JumpEvaluation:
    name: str
    z: complex
    side: Literal["plus", "minus", "off"]
    matrix: np.ndarray


@dataclass(frozen=True)
class Prediction:
    n: int
    psi: float
    det_psi22: float
    log_ratio: float
    leading_log_p: float


def _check_not_one(z, tol=1e-14):
    if abs(complex(z) - 1) < tol:
        raise SingularPointError("z = 1 is singular for this jump")


def _arc_z(theta):
    return np.exp(1j * theta)


# ---------------------------------------------------------------- operator jump

def m_op_entry(z, s, t, row: int, col: int, params: ModelParams):
    """Non-delta part of block ``(row, col)`` (1-based) of the operator jump M(z|s,t).

    Returns ``(value, has_delta)``; ``has_delta`` marks the diagonal blocks,
    which also carry ``delta(s - t)``. Blocks:
    ``[[I + gamma P^T, -gamma Q(z) z^-n e^phi], [gamma Q(1/z) z^n e^-phi, I - gamma P]]``.
    """
    _check_not_one(z)
    g = params.gamma
    zn = complex(z) ** params.n
    ephi = np.exp(params.phi(z))
    if (row, col) == (1, 1):
        return g * p_kernel(z, t, s), True
    if (row, col) == (1, 2):
        return -g * q_kernel(z, s, t) * ephi / zn, False
    if (row, col) == (2, 1):
        return g * q_kernel(1 / z, s, t) * zn / ephi, False
    if (row, col) == (2, 2):
        return -g * p_kernel(z, s, t), True
    raise DomainError(f"block index must be in {{1, 2}}^2, got ({row}, {col})")


def _off_diagonal_blocks(z, params: ModelParams, hq: HalfLineQuadrature):
    zn = complex(z) ** params.n
    ephi = complex(np.exp(params.phi(z)))
    X = q_matrix(z, hq) * ephi / zn          # Q(z) z^-n e^phi
    Y = q_matrix(1 / z, hq) * zn / ephi      # Q(1/z) z^n e^-phi
    return X, Y


def factor_check_im_ip(z, params: ModelParams, hq: HalfLineQuadrature,
                       compress: bool = True) -> float:
    """Residual of ``M|_{Im(I-P)} = M_U M_L^{-1}`` on the grid.

    ``M_U M_L^{-1}`` differs from the restricted jump by ``-P`` in its (1,1)
    block, which vanishes once both sides are compressed by ``I - P``.
    ``compress=False`` skips the compression (a negative control).
    """
    _check_not_one(z)
    m = hq.node_count
    I = np.eye(m)
    Z = np.zeros((m, m))
    X, Y = _off_diagonal_blocks(z, params, hq)
    M_U = np.block([[I, -X], [Z, I]])
    M_L = np.block([[I, Z], [-Y, I]])
    M_restricted = np.block([[I, -X], [Y, I]])
    product = M_U @ np.linalg.inv(M_L)
    diff = product - M_restricted
    if compress:
        Pc = I - p_matrix(z, hq)
        proj = np.block([[Pc, Z], [Z, Pc]])
        diff = proj @ diff @ proj
    return float(np.max(np.abs(diff)))


def decay_check_lensing(params: ModelParams, radius: float, samples: int = 16,
                        hq: HalfLineQuadrature | None = None) -> float:
    """Largest off-diagonal magnitude of the lens factor at ``|z| = radius``.

    ``radius > 1``: ``|Q(z|s,t) z^-n e^phi|`` (M_U side); ``radius < 1``:
    ``|Q(1/z|s,t) z^n e^-phi|`` (M_L side). Angles sample the arc interior and
    ``s, t`` range over the half-line grid (64 Laguerre nodes by default).
    """
    if radius == 1:
        raise DomainError("the lens contours lie off the unit circle")
    from .contour import build_halfline, interior_thetas

    hq = hq or build_halfline(64)
    s = hq.s_nodes
    best = 0.0
    for theta in interior_thetas(params.psi, samples):
        z = radius * np.exp(1j * theta)
        phi = complex(params.phi(z))
        if radius > 1:
            vals = np.abs(q_kernel(z, s[:, None], s[None, :])) * abs(z ** (-params.n) * np.exp(phi))
        else:
            vals = np.abs(q_kernel(1 / z, s[:, None], s[None, :])) * abs(z ** params.n * np.exp(-phi))
        best = max(best, float(vals.max()))
    return best


# ---------------------------------------------------------------- reductions on Im P

def jump_im_p(theta, params: ModelParams) -> np.ndarray:
    z = _arc_z(theta)
    zn = z ** params.n
    ephi = np.exp(params.phi(z))
    return np.array([
        [2, -((1 - z) / 2) * ephi / zn],
        [(2 / (1 - z)) * zn / ephi, 0],
    ], dtype=complex)


def conjugated_jump(theta, params: ModelParams, eps: float = 1e-6) -> np.ndarray:
    """Jump after conjugation by ``alpha^{n sigma3/2} (.) g^{n sigma3}``."""
    ctx = BranchContext(params.psi)
    gp, gm = _g_sides(theta, ctx, eps)
    z = _arc_z(theta)
    ephi = np.exp(params.phi(z))
    return np.array([
        [2 * (gp / gm) ** params.n, -((1 - z) / 2) * ephi],
        [(2 / (1 - z)) / ephi, 0],
    ], dtype=complex)


def _g_sides(theta, ctx: BranchContext, eps: float):
    gp = complex(richardson_boundary(lambda z: g_fn(z, ctx), ctx.psi, theta, "plus", eps))
    gm = complex(richardson_boundary(lambda z: g_fn(z, ctx), ctx.psi, theta, "minus", eps))
    return gp, gm


def conjugation_residual(theta, params: ModelParams, eps: float = 1e-6) -> float:
    """Compare the conjugated jump with ``D1 M|_{ImP} D2`` built from g_+-."""
    ctx = BranchContext(params.psi)
    gp, gm = _g_sides(theta, ctx, eps)
    n = params.n
    half = np.exp(0.5 * n * np.log(complex(ctx.alpha)))  # alpha^{n/2}, principal branch
    left = np.diag([half * gm ** (-n), gm ** n / half])
    right = np.diag([gp ** n / half, half * gp ** (-n)])
    built = left @ jump_im_p(theta, params) @ right
    direct = conjugated_jump(theta, params, eps)
    return float(np.max(np.abs(built - direct)) / max(1.0, np.max(np.abs(direct))))


def limit_jump(z, params: ModelParams) -> np.ndarray:
    _check_not_one(z)
    ephi = complex(np.exp(params.phi(z)))
    return np.array([
        [0, -((1 - z) / 2) * ephi],
        [(2 / (1 - z)) / ephi, 0],
    ], dtype=complex)


def diagonalize(z, params: ModelParams):
    """``S, D`` with ``S D S^-1 = limit_jump(z)`` and the max-entry residual."""
    _check_not_one(z)
    u = 2j * complex(np.exp(-params.phi(z))) / (z - 1)
    S = np.array([[1, 1], [u, -u]], dtype=complex)
    D = np.diag([1j, -1j])
    residual = np.max(np.abs(S @ D @ np.linalg.inv(S) - limit_jump(z, params)))
    return S, D, float(residual)


def f_tilde(z, params: ModelParams, beta: Callable | None = None) -> np.ndarray:
    """Limiting solution ``S B^-1 S^-1`` with ``B = diag(1/beta, beta)``.

    Entries, with ``u = 2i e^-phi/(z - 1)``:
    ``[[(b + 1/b)/2, (b - 1/b)/(2u)], [u (b - 1/b)/2, (b + 1/b)/2]]``.
    ``beta`` may be replaced (tests inject wrong branches through it).
    """
    z = complex(z)
    if abs(z - 1) < POLE_TOL:
        raise SingularPointError("f_tilde has a pole at z = 1; use f_tilde_22")
    b = (beta or (lambda w: beta_fn(w, BranchContext(params.psi))))(z)
    b = complex(b)
    u = 2j * complex(np.exp(-params.phi(z))) / (z - 1)
    plus, minus = (b + 1 / b) / 2, (b - 1 / b) / 2
    return np.array([[plus, minus / u], [u * minus, plus]])


def f_tilde_22(z, params: ModelParams):
    """(2,2) entry ``(beta + 1/beta)/2``; regular at z = 1."""
    b = beta_fn(z, BranchContext(params.psi))
    return (b + 1 / b) / 2


def f_tilde_jump_residual(theta, params: ModelParams, eps: float = 1e-6,
                          beta: Callable | None = None) -> float:
    """``max |F_+ - F_- M~|`` at ``exp(i theta)`` with Richardson boundary values."""
    fp = richardson_boundary(lambda z: f_tilde(z, params, beta), params.psi, theta, "plus", eps)
    fm = richardson_boundary(lambda z: f_tilde(z, params, beta), params.psi, theta, "minus", eps)
    return float(np.max(np.abs(fp - fm @ limit_jump(_arc_z(theta), params))))


def f_tilde_boundary(theta, params: ModelParams, eps: float = 1e-6):
    out = []
    for side in ("plus", "minus"):
        mat = richardson_boundary(lambda z: f_tilde(z, params), params.psi, theta, side, eps)
        out.append(JumpEvaluation("f_tilde", complex(_arc_z(theta)), side, mat))
    return tuple(out)


def f_tilde_at_infinity(params: ModelParams) -> np.ndarray:
    """Exact limit of :func:`f_tilde` as ``z -> infinity`` (constant phi only).

    ``u -> 0`` like ``1/z`` while ``beta - 1/beta ~ -(b - a)/(2z)``, so the
    (1,2) entry tends to ``-e^phi sin(psi)/4`` rather than 0.
    """
    coeffs = tuple(params.phi_coeffs)
    if any(c != 0 for c in coeffs[1:]):
        raise DomainError("the limit at infinity is finite only for constant phi")
    ephi = np.exp(coeffs[0]) if coeffs else 1.0
    return np.array([[1, -ephi * np.sin(params.psi) / 4], [0, 1]], dtype=complex)


def predictions(n: int, psi: float) -> Prediction:
    if n < 0:
        raise DomainError("n must be nonnegative")
    if not (-np.pi < psi < 0):
        raise DomainError("psi must lie in (-pi, 0)")
    s = np.sin(psi / 2)
    ls = np.log(abs(s))
    return Prediction(
        n=n,
        psi=psi,
        det_psi22=float(-s ** (2 * n + 1)),
        log_ratio=float((2 * n + 1) * ls),
        leading_log_p=float(n * n * ls) + 0.0,  # no -0.0 at n = 0
    )

