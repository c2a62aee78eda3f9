"""The g-function and the quarter-root beta across the arc.

Shows the jump conditions g+ g- = alpha/z, |g+/g-| < 1 and beta+/beta- = i at
a few points of the arc, and the values at the origin.
"""
import numpy as np

from efpdet.branches import BranchContext, beta_fn, boundary_values, g_fn
from efpdet.contour import interior_thetas

ctx = BranchContext(-np.pi / 2)
print(f"alpha = {ctx.alpha:.6f}   g(0) = {complex(g_fn(0.0, ctx)).real:.6f}   sin^2(psi/2) = {np.sin(ctx.psi / 2) ** 2:.6f}")

for th in interior_thetas(ctx.psi, 5):
    z = np.exp(1j * th)
    gp, gm = boundary_values("g", th, ctx)
    bp, bm = boundary_values("beta", th, ctx)
    print(f"theta={th:.3f}  |g+g- - alpha/z|={abs(gp * gm - ctx.alpha / z):.1e}  "
          f"|g+/g-|={abs(gp / gm):.4f}  beta+/beta-={complex(bp / bm):.6f}")

b0 = complex(beta_fn(0.0, ctx))
print("beta(0) =", b0, " (beta+1/beta)/2 =", (b0 + 1 / b0) / 2)
