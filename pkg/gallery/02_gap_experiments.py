# Is the account positive for every gain inside the gap interval?
#
# Exhaustive mode checks all 2**N extreme paths; by multilinearity of X(v, k)
# in the returns this covers every admissible path.  Long horizons are
# sampled, with v* always included.
import time

import numpy as np

from tradepos import MarketBounds, Mode, TradingParams, gap_scan, stagewise_min

b = MarketBounds(-0.8, 0.9)
t0 = time.perf_counter()
rows = gap_scan(b, 10, 100, Mode.EXHAUSTIVE)
print(f"N=10, 100 gains, exhaustive: all positive = {all(r.all_positive for r in rows)} "
      f"({time.perf_counter() - t0:.2f}s)")
print("smallest state per gain (first, middle, last):",
      [f"{rows[i].min_state:.3g}" for i in (0, 50, 99)])

# Which extreme path is worst at each stage?  Early on it is v*, later not.
p = TradingParams(0.54, 1.0, b)
for k, m in enumerate(stagewise_min(p, 10)):
    if k >= 2:
        bits = format(m.path.mask & ((1 << k) - 1), f"0{k}b")[::-1]
        print(f"k={k:2d} worst path (v(0) first, 1 = v_max) {bits:>10s}  X={m.value:.5f}")

# Scaled-down version of the long-horizon experiment
b2 = MarketBounds(-0.3, 0.2)
t0 = time.perf_counter()
rows = gap_scan(b2, 100, 20, Mode.SAMPLED, count=20_000, seed=1)
print(f"N=100, 20 gains, 20000 sampled paths each: all positive = "
      f"{all(r.all_positive for r in rows)} ({time.perf_counter() - t0:.1f}s)")
print("min over samples:", np.array([r.min_state for r in rows[::5]]))
