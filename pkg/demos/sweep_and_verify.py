"""Second differences of log P against 2 log|sin(psi/2)|, then the self-check suite.

Equivalent CLI calls:
    efpdet sweep --psi -2.2 --n-min 0 --n-max 13 --nodes 64
    efpdet verify --level quick
"""
import io

from efpdet.contour import ModelParams
from efpdet.harness import emit, leading_target, ratio_sign_convention, run_sweep, run_verify, second_differences

for psi in (-0.8, -1.5707963267948966, -2.2):
    recs = run_sweep(ModelParams(0, psi), 0, 13, 64)
    sd = second_differences(recs)
    print(f"psi={psi:+.3f}  target {leading_target(psi):+.4f}  "
          + " ".join(f"{sd[n]:+.4f}" for n in (2, 4, 6, 8, 10, 12)))
    print("    ratio sign convention supported:", ratio_sign_convention(recs)["verdict"])

print(emit(recs[:3], "csv", io.StringIO()))
print(run_verify("quick").render())
