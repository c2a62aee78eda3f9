"""Quadrature on the arc and the half-line.

The arc rule is Gauss-Legendre in theta, so smooth functions of z converge
spectrally; monomials z^k stop being exact once k outgrows the node count
relative to the arc length.
"""
import numpy as np

from efpdet.contour import build_arc, build_halfline
from efpdet.harness import arc_polynomial_degree

for psi in (-0.3, -np.pi / 2, -2.5):
    aq = build_arc(psi, 64)
    a, b = aq.endpoints
    total = complex(np.sum(aq.contour_weights))
    print(f"psi={psi:+.3f}  sum of weights={total:.15f}  exact={b - a:.15f}")
    print(f"    monomials resolved up to degree {arc_polynomial_degree(psi, 64)} with 64 nodes")

# doubling check on something analytic
f = lambda z: np.exp(z) / (z - 2)  # noqa: E731
for m in (16, 32, 64):
    coarse = complex(build_arc(-1.0, m).integrate(f))
    fine = complex(build_arc(-1.0, 2 * m).integrate(f))
    print(f"m={m:3d}  |I(m) - I(2m)| = {abs(coarse - fine):.2e}")

hq = build_halfline(64)
print("int_0^inf s^2 e^{-s/2} ds =", hq.integrate(lambda s: s ** 2 * np.exp(-s / 2)), "(exact 16)")
