# Critical gains as functions of the return bounds.
#
# Below alpha_minus every path keeps the account positive; above alpha_plus
# the "bait then punish" path v* = (v_max, v_min, v_min, ...) drives it
# negative.  Between the two lies the gap interval.
import numpy as np

from tradepos import MarketBounds, compute_thresholds, threshold_surface
from _plotting import pyplot, save

for vmin, vmax in [(-0.8, 0.9), (-0.3, 0.2)]:
    t = compute_thresholds(MarketBounds(vmin, vmax))
    print(f"bounds ({vmin}, {vmax}): gap [{t.alpha_minus:.4f}, {t.alpha_plus:.4f}]  "
          f"regime {t.regime.value}  alpha_max(2)={t.alpha_max2:.4f}  alpha_max(3)={t.alpha_max3:.4f}")

# Sweep v_min for a few v_max values.  The upper threshold switches formula
# where v_max = 1 + 2 v_min.
grid = np.linspace(-0.95, -0.05, 91)
vmaxes = [0.2, 0.5, 0.9, 1.5]
surfaces = {vmax: threshold_surface(vmax, grid) for vmax in vmaxes}
for vmax, rows in surfaces.items():
    switch = [r.v_min for r in rows if r.regime.value == "Singular"]
    print(f"v_max={vmax}: singular regime for v_min >= {min(switch):.2f}" if switch
          else f"v_max={vmax}: star regime throughout")

plt = pyplot()
if plt is not None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for vmax, rows in surfaces.items():
        v = [r.v_min for r in rows]
        line, = ax.plot(v, [r.alpha_plus for r in rows], label=f"alpha_plus, v_max={vmax}")
        ax.plot(v, [r.alpha_minus for r in rows], "--", color=line.get_color())
    ax.set_yscale("log")
    ax.set_xlabel("v_min")
    ax.set_ylabel("gain")
    ax.legend(fontsize=7)
    save(fig, "threshold_surface.png")
