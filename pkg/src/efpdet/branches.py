"""Functions with a branch cut along the arc C.

Both algebraic functions live on the Möbius ratio

    w(z) = (z - a) / (z - b),   a = exp(-i psi) (start of C),  b = exp(i psi) (end of C)

which sends the unit circle to a straight line through 0 and sends the arc C
to one ray ``arg w = kappa`` of that line. Powers ``w**p`` are taken with the
argument measured in the window ``(kappa - 2 pi, kappa)``; that window
contains ``arg 1 = 0``, so every power is continuous off C and equals 1 at
``z = infinity``. Then

    R(z)    = (z - b) * w(z)**(1/2)      (R(z)/z -> 1 at infinity, R(0) = +1)
    beta(z) = w(z)**(-1/4)               (beta(infinity) = 1)
    g(z)    = (R(z) + z - 1) / (2 z)

For beta the quarter power is taken of ``(z - exp(i psi))/(z - exp(-i psi))``.
With that orientation ``beta_+/beta_- = i`` on C (``+`` = inside the circle),
which is the factorisation ``diag(i, -i) = B_- B_+^{-1}`` used to build the
limiting solution. The reciprocal orientation gives ``-i`` instead.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .contour import Side, check_psi, richardson_boundary
from .errors import DomainError, SingularPointError

ARC_TOL = 1e-12
BRANCH_POINT_TOL = 1e-8


@dataclass(frozen=True)
class BranchContext:
    psi: float
    alpha: float = field(init=False)
    endpoints: tuple[complex, complex] = field(init=False)
    cut_angle: float = field(init=False, repr=False)

    def __post_init__(self):
        psi = check_psi(self.psi)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "alpha", -np.sin(psi / 2) ** 2)
        a, b = np.exp(-1j * psi), np.exp(1j * psi)
        object.__setattr__(self, "endpoints", (complex(a), complex(b)))
        # C passes through -1; its image ray fixes the cut direction in the w-plane
        kappa = np.angle((-1 - a) / (-1 - b)) % (2 * np.pi)
        object.__setattr__(self, "cut_angle", float(kappa))


def on_arc(z, ctx: BranchContext, tol: float = ARC_TOL):
    """Boolean mask: is ``z`` on the closed arc C (within ``tol`` of the circle)?"""
    z = np.asarray(z, dtype=complex)
    near_circle = np.abs(np.abs(z) - 1.0) <= tol
    return near_circle & (np.abs(np.angle(z)) >= -ctx.psi - tol)


def _reject_arc(z, ctx: BranchContext, what: str):
    if np.any(on_arc(z, ctx)):
        raise DomainError(f"{what} is cut along C; z={z!r} lies on the arc")


def _ratio_power(z, ctx: BranchContext, p: float):
    """``w(z)**p`` with the cut along the image of C and value 1 at infinity."""
    a, b = ctx.endpoints
    z = np.asarray(z, dtype=complex)
    w = (z - a) / (z - b)
    kappa = ctx.cut_angle
    arg = kappa - 2 * np.pi + np.mod(np.angle(w) - kappa, 2 * np.pi)
    return np.exp(p * (np.log(np.abs(w)) + 1j * arg))


def sqrt_R(z, ctx: BranchContext):
    """Branch of ``((z - exp(-i psi))(z - exp(i psi)))**(1/2)`` with ``R(z)/z -> 1``."""
    _reject_arc(z, ctx, "R")
    z = np.asarray(z, dtype=complex)
    b = ctx.endpoints[1]
    return (z - b) * _ratio_power(z, ctx, 0.5)


def g_fn(z, ctx: BranchContext):
    """The g-function: g -> 1 at infinity, g_+ g_- = alpha/z on C, |g_+/g_-| < 1."""
    _reject_arc(z, ctx, "g")
    z = np.asarray(z, dtype=complex)
    # (R + z - 1)/(2z) rationalised: no 0/0 at z = 0, where it gives sin^2(psi/2)
    return (1 - np.cos(ctx.psi)) / (sqrt_R(z, ctx) - z + 1)


def beta_fn(z, ctx: BranchContext):
    """Quarter-root function, analytic off C with ``beta(infinity) = 1``."""
    _reject_arc(z, ctx, "beta")
    z = np.asarray(z, dtype=complex)
    a, b = ctx.endpoints
    if np.any(np.minimum(np.abs(z - a), np.abs(z - b)) < BRANCH_POINT_TOL):
        raise SingularPointError(f"beta is singular at the branch points; z={z!r}")
    return _ratio_power(z, ctx, -0.25)


def half_power(theta, k: int):
    """``z**(k/2)`` on the arc via the theta-determination ``exp(i k theta / 2)``."""
    return np.exp(0.5j * k * np.asarray(theta))


_NAMED: dict[str, Callable] = {"g": g_fn, "beta": beta_fn, "R": sqrt_R}


def boundary_values(fn: Literal["g", "beta", "R"] | Callable, theta: float,
                    ctx: BranchContext, eps: float = 1e-6):
    """Richardson-extrapolated boundary values ``(f_+, f_-)`` at ``exp(i theta)``."""
    f = _NAMED[fn] if isinstance(fn, str) else fn
    vals = []
    side: Side
    for side in ("plus", "minus"):
        vals.append(complex(richardson_boundary(lambda z: f(z, ctx), ctx.psi, theta, side, eps)))
    return tuple(vals)


def track_root(f4: Callable, path: np.ndarray, start: complex, power: int = 4):
    """Continuity oracle: follow a ``power``-th root of ``f4`` along ``path``.

    At every step the root closest to the previous value is selected.
    Independent of the cut-based construction above; used to validate it.
    """
    roots = np.exp(2j * np.pi * np.arange(power) / power)
    current = complex(start)
    for z in path[1:]:
        base = complex(f4(z)) ** (1.0 / power)
        candidates = base * roots
        current = candidates[np.argmin(np.abs(candidates - current))]
    return current
