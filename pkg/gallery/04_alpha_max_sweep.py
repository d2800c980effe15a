# Finite-horizon thresholds by bisection.
#
# alpha_max(N) is the largest gain that keeps every extreme path positive
# through stage N.  It can only shrink as N grows, and the conjecture says it
# never drops below alpha_plus.
from fractions import Fraction

from tradepos import MarketBounds, alpha_max_bisect, compute_thresholds
from tradepos.exact import RationalParams, verify_exhaustive_exact

b = MarketBounds(-0.8, 0.9)
t = compute_thresholds(b)
print(f"alpha_minus={t.alpha_minus:.8f} alpha_plus={t.alpha_plus:.8f}")
print(f"closed forms: alpha_max(2)={t.alpha_max2:.8f} alpha_max(3)={t.alpha_max3:.8f}")
for n in range(2, 15):
    e = alpha_max_bisect(b, 1.0, n, 1e-8)
    flag = "" if e.ok else f"  anomalies: {e.anomalies}"
    print(f"N={n:2d}  alpha_max in [{e.lower:.8f}, {e.upper:.8f}]{flag}")

# An exact cross-check at the N=2 threshold: X(2) is exactly zero there.
a2 = 1 / (Fraction(4, 5) * Fraction(19, 10))
res = verify_exhaustive_exact(RationalParams(a2, 1, Fraction(-4, 5), Fraction(9, 10)), 2)
print(f"exact alpha_max(2) = {a2}: witness stage {res.witness.stage}, value {res.witness.value}")
