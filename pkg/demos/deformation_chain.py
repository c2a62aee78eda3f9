"""From the g-conjugated jump to the explicit limiting solution.

At large n the conjugated jump approaches M~, which diagonalises with
eigenvalues +-i; F~ = S B^-1 S^-1 solves the jump. Its value at infinity and
its (2,2) entry at the origin are printed next to the naive expectations.
"""
import numpy as np

from efpdet.asymptotics import (
    conjugated_jump,
    diagonalize,
    f_tilde,
    f_tilde_at_infinity,
    f_tilde_jump_residual,
    limit_jump,
    predictions,
)
from efpdet.contour import ModelParams

psi = -np.pi / 2
th = np.pi + 0.4
for n in (1, 10, 50, 200):
    gap = np.max(np.abs(conjugated_jump(th, ModelParams(n, psi)) - limit_jump(np.exp(1j * th), ModelParams(n, psi))))
    print(f"n={n:3d}  |M_g - M~| = {gap:.2e}")

p = ModelParams(0, psi)
print("S D S^-1 residual at z=0.5i:", diagonalize(0.5j, p)[2])
print("F~ jump residual at theta=pi:", f_tilde_jump_residual(np.pi, p))
print("F~(1e8) =\n", np.round(f_tilde(1e8, p), 8))
print("exact limit at infinity =\n", f_tilde_at_infinity(p))
print("F~_22(0) =", f_tilde(0.0, p)[1, 1].real, "  sin(psi/2) =", np.sin(psi / 2))
print("predicted det Psi_22(0) at n=3:", predictions(3, psi).det_psi22)
