"""P and Q on a Gauss-Laguerre grid.

P(z) is a rank-one orthogonal projector for z on the circle, Q(z) restricts
to (1 - z)/2 on its range, and Q(z) Q(1/z) collapses to P.
"""
import numpy as np

from efpdet.contour import build_halfline
from efpdet.opkernels import p_matrix, projection_identities, r_closed, r_integral

hq = build_halfline(64)
z = np.exp(2.4j)
for key, val in projection_identities(z, hq).items():
    print(f"{key:>14s}: {val:.2e}")
print("rank of P:", np.linalg.matrix_rank(p_matrix(z, hq), tol=1e-8))

z1, z2 = -1.0, 1j
print("r(-1, i) closed form:", r_closed(z1, z2), " half-line integral:", r_integral(z1, z2, hq))
