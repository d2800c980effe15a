# The state along v* in closed form.
#
# From stage 2 on the recursion along v* is a constant second order linear
# recurrence.  Its discriminant theta picks the closed form; complex roots
# mean oscillation and therefore an eventual sign change.
import numpy as np

from tradepos import (MarketBounds, TradingParams, asymptote_check, closed_form_state,
                      compute_thresholds, distinguished_path, oscillation_report, simulate,
                      spectral_data)
from tradepos.thresholds import alpha_singular
from _plotting import pyplot, save

b = MarketBounds(-0.8, 0.9)
a_s = alpha_singular(b)
for alpha in [0.3, 0.588, 0.6, a_s, 2.0]:
    p = TradingParams(alpha, 1.0, b)
    sd = spectral_data(p)
    rep = oscillation_report(p)
    xs = simulate(p, distinguished_path(b, 30)).states
    err = max(abs(closed_form_state(p, k) - xs[k]) for k in range(31))
    print(f"alpha={alpha:.4f} form={sd.form.value:12s} case={rep.case.value:8s} "
          f"first negative stage={rep.predicted_sign_failure}  max |closed - recursion| = {err:.1e}")

# Just above the threshold the sign change comes later and later
a_plus = compute_thresholds(b).alpha_plus
for eps in [1e-1, 1e-2, 1e-4, 1e-6]:
    p = TradingParams(a_plus * (1 + eps), 1.0, b)
    print(f"alpha_plus*(1+{eps:g}): first negative stage {oscillation_report(p).predicted_sign_failure}")

d = asymptote_check(TradingParams(0.3, 1.0, b), 200)
print(f"decay rate {d.rate:.4f}, |X| monotone from stage {d.monotone_from}")

plt = pyplot()
if plt is not None:
    ks = np.arange(2, 40)
    fig, ax = plt.subplots(figsize=(6, 4))
    for alpha in [0.5, 0.7, 2.0]:
        p = TradingParams(alpha, 1.0, b)
        ax.plot(ks, [closed_form_state(p, int(k)) for k in ks], "o-", ms=3, label=f"alpha={alpha}")
    ax.axhline(0, color="k", lw=0.5)
    ax.set_xlabel("k")
    ax.set_ylabel("X(v*, k)")
    ax.legend()
    save(fig, "closed_form.png")
