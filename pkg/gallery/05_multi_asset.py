# Several assets traded with the same delayed feedback rule.
#
# Positivity fails for sure once 4 * sum_i alpha_i (1 + v_min_i)|v_min_i| > 1:
# the summed recursion along the per-asset v* paths then oscillates.
import numpy as np

from tradepos import MarketBounds, Mode, MultiAssetParams, oscillation_condition, verify_multi
from tradepos.multiasset import distinguished_paths, oscillation_evidence, simulate_multi

bounds = (MarketBounds(-0.8, 0.9), MarketBounds(-0.3, 0.2))
for alphas in [(0.1, 0.3), (0.3, 0.6), (1.0, 1.0)]:
    mp = MultiAssetParams(alphas, bounds, 1.0)
    cond = oscillation_condition(mp)
    stage = oscillation_evidence(mp) if cond.holds else None
    ver = verify_multi(mp, 12, Mode.EXHAUSTIVE)
    print(f"alphas={alphas}: lhs={cond.lhs:.3f} oscillation={cond.holds} "
          f"first negative along v*={stage}  all 2^24 vertices positive through N=12: {ver.all_positive}")

mp = MultiAssetParams((0.3, 0.6), bounds, 1.0)
xs = np.array(simulate_multi(mp, distinguished_paths(mp, 20)).states)
print("X along v* :", np.round(xs, 4))
