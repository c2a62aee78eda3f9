"""Contour geometry and quadrature grids.

The arc ``C`` is ``z = exp(i theta)`` for ``-psi < theta < 2 pi + psi`` with
``psi`` in ``(-pi, 0)``; it runs counterclockwise from ``exp(-i psi)`` through
``z = -1`` to ``exp(i psi)`` and never touches ``z = 1``.

Arc grids are built in extended precision (``numpy.longdouble``) because the
Fredholm determinants downstream are exponentially small and lose digits to
cancellation; everything else is plain float64.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.special import roots_laguerre

from .errors import DomainError

Side = Literal["plus", "minus"]

LD = np.longdouble
CLD = np.clongdouble
PI_LD = np.arccos(LD(-1))

# admissible |psi| window; outside it the arc nearly closes on z=1 or collapses
PSI_MARGIN = 0.05


def check_psi(psi: float) -> float:
    psi = float(psi)
    if not (-np.pi < psi < 0):
        raise DomainError(f"psi must lie in (-pi, 0), got {psi!r}")
    if abs(psi) < PSI_MARGIN or abs(psi) > np.pi - PSI_MARGIN:
        raise DomainError(
            f"psi={psi!r} is within {PSI_MARGIN} of the ends of (-pi, 0); "
            "the arc approaches z=1 or degenerates and error bounds are lost"
        )
    return psi


@dataclass(frozen=True)
class ModelParams:
    """One problem instance: string length, field angle, dual field, coupling.

    ``phi_coeffs`` are the Taylor coefficients ``c_k`` of the entire function
    ``phi(z) = sum_k c_k z**k``.
    """

    n: int
    psi: float
    phi_coeffs: tuple[complex, ...] = ()
    gamma: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise DomainError(f"n must be a nonnegative integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "psi", check_psi(self.psi))
        object.__setattr__(self, "phi_coeffs", tuple(complex(c) for c in self.phi_coeffs))
        if not (0.0 <= self.gamma <= 1.0):
            raise DomainError(f"gamma must lie in [0, 1], got {self.gamma!r}")
        object.__setattr__(self, "gamma", float(self.gamma))

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def phi(self, z):
        """Evaluate phi by Horner's rule; keeps the dtype of ``z``."""
        z = np.asarray(z)
        out = np.zeros_like(z, dtype=np.result_type(z, complex))
        for c in reversed(self.phi_coeffs):
            out = out * z + c
        return out

    def dphi(self, z):
        z = np.asarray(z)
        out = np.zeros_like(z, dtype=np.result_type(z, complex))
        for k in range(len(self.phi_coeffs) - 1, 0, -1):
            out = out * z + k * self.phi_coeffs[k]
        return out


def gauss_legendre(m: int, dtype=LD) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1], ascending, in ``dtype``.

    Starts from the float64 rule and polishes with Newton steps on the
    three-term recurrence so that long double grids are accurate to ~1e-19.
    """
    if m < 1:
        raise DomainError("need at least one node")
    x0, _ = np.polynomial.legendre.leggauss(m)
    x = x0.astype(dtype)

    def legendre_and_derivative(x):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for k in range(2, m + 1):
            p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
        dp = m * (x * p1 - p0) / (x * x - 1)
        return p1, dp

    for _ in range(3):
        p, dp = legendre_and_derivative(x)
        x = x - p / dp
    _, dp = legendre_and_derivative(x)
    w = 2 / ((1 - x * x) * dp * dp)
    return x, w


@dataclass(frozen=True)
class ArcQuadrature:
    psi: float
    theta_nodes: np.ndarray
    z_nodes: np.ndarray
    contour_weights: np.ndarray
    panels: int = 1

    @property
    def node_count(self) -> int:
        return len(self.theta_nodes)

    @property
    def endpoints(self) -> tuple[complex, complex]:
        return complex(np.exp(-1j * self.psi)), complex(np.exp(1j * self.psi))

    def integrate(self, f: Callable) -> complex:
        """Approximate the contour integral of ``f(z) dz`` along the arc."""
        return np.sum(f(self.z_nodes) * self.contour_weights)


def build_arc(psi: float, m: int, panels: int = 1, dtype=LD) -> ArcQuadrature:
    """Gauss-Legendre grid on the arc, with the ``i exp(i theta)`` Jacobian.

    ``m`` is the total node count; with ``panels > 1`` the theta interval is
    split into equal panels of ``m // panels`` nodes each.
    """
    psi = check_psi(psi)
    if m < 2:
        raise DomainError(f"need m >= 2 arc nodes, got {m}")
    if panels < 1 or m % panels:
        raise DomainError(f"node count {m} is not divisible into {panels} panels")
    cdtype = np.result_type(dtype, 1j)
    x, w = gauss_legendre(m // panels, dtype)
    pi = PI_LD if dtype == LD else np.pi
    a = -dtype(psi)
    b = 2 * pi + dtype(psi)
    edges = a + (b - a) * np.arange(panels + 1, dtype=dtype) / panels
    thetas, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        thetas.append((hi - lo) / 2 * x + (hi + lo) / 2)
        weights.append((hi - lo) / 2 * w)
    theta = np.concatenate(thetas)
    wt = np.concatenate(weights)
    z = np.exp(1j * theta.astype(cdtype))
    return ArcQuadrature(
        psi=psi,
        theta_nodes=theta,
        z_nodes=z,
        contour_weights=wt * 1j * z,
        panels=panels,
    )


@dataclass(frozen=True)
class HalfLineQuadrature:
    """Gauss-Laguerre grid with the exp(-s) weight folded into ``weights``.

    ``sum(weights * f(s_nodes))`` approximates the plain integral of ``f``
    over ``[0, inf)``.
    """

    s_nodes: np.ndarray
    weights: np.ndarray
    laguerre_weights: np.ndarray = field(repr=False)

    @property
    def node_count(self) -> int:
        return len(self.s_nodes)

    def integrate(self, f: Callable) -> complex:
        return np.sum(self.weights * f(self.s_nodes))


def build_halfline(m: int) -> HalfLineQuadrature:
    if m < 2:
        raise DomainError(f"need m >= 2 half-line nodes, got {m}")
    s, w = roots_laguerre(m)
    return HalfLineQuadrature(s_nodes=s, weights=w * np.exp(s), laguerre_weights=w)


def on_arc_theta(psi: float, theta: float) -> bool:
    """True when theta is strictly inside (-psi, 2 pi + psi)."""
    return -psi < theta < 2 * np.pi + psi


def boundary_point(psi: float, theta: float, side: Side, eps: float = 1e-6) -> complex:
    """Point at distance ``eps`` from the arc: inside for ``plus``, outside for ``minus``."""
    if not on_arc_theta(psi, theta):
        raise DomainError(f"theta={theta!r} is not interior to the arc for psi={psi!r}")
    if not (0 < eps < 0.1):
        raise DomainError(f"eps must lie in (0, 0.1), got {eps!r}")
    if side == "plus":
        radius = 1.0 - eps
    elif side == "minus":
        radius = 1.0 + eps
    else:
        raise DomainError(f"side must be 'plus' or 'minus', got {side!r}")
    return radius * np.exp(1j * theta)


def richardson_boundary(f: Callable, psi: float, theta: float, side: Side, eps: float = 1e-6):
    """Two-point Richardson limit ``2 f(eps/2) - f(eps)`` of ``f`` at a boundary point.

    ``f`` may return scalars or arrays (e.g. 2x2 matrices).
    """
    f1 = np.asarray(f(boundary_point(psi, theta, side, eps)))
    f2 = np.asarray(f(boundary_point(psi, theta, side, eps / 2)))
    return 2 * f2 - f1


def interior_thetas(psi: float, count: int, margin: float = 0.05) -> np.ndarray:
    """Evenly spaced sample angles inside the arc, kept ``margin`` away from its ends."""
    return np.linspace(-psi + margin, 2 * np.pi + psi - margin, count)


def random_interior_thetas(psi: float, count: int, rng: np.random.Generator,
                           margin: float = 0.05) -> np.ndarray:
    return rng.uniform(-psi + margin, 2 * np.pi + psi - margin, count)


def nodes_as_float(values: Sequence) -> np.ndarray:
    """Downcast extended-precision arrays to complex128 for reporting."""
    return np.asarray(values, dtype=complex)
