# How large must n be before a mode can be called significant?
#
# At a mode delta <= -(2/n) sum_i K_h'(d_i^2) <= 2 sup|K_h'|, which is 2/h for
# the exponential kernel. The threshold only falls like n^(-1/6) (square root
# of a cube root), so the crossing point is far out. Real modes sit well below
# the ceiling, which pushes the needed n further still.
import math

from funmodal.kernels import kernel_constants
from funmodal.significance import ThresholdInputs, beta3, c1_alpha, c2_alpha, threshold_value

M = 3.0
for h in (0.05, 0.2, 1.0):
    k = kernel_constants("exponential", h)
    ceiling = 2.0 / h
    print(f"\nh={h}: delta can never exceed {ceiling:.1f}")
    for n in (10**2, 10**3, 10**4, 10**6, 10**8, 10**10):
        inp = ThresholdInputs(n, M, 0.05, k)
        thr = threshold_value(c1_alpha(inp), c2_alpha(inp), beta3(k))
        mark = "reachable" if thr <= ceiling else ""
        print(f"  n={n:>12,d} threshold={thr:9.3f} {mark}")
    lo, hi = 1.0, 1e30
    while hi / lo > 1.01:
        mid = math.sqrt(lo * hi)
        inp = ThresholdInputs(int(mid), M, 0.05, k)
        if threshold_value(c1_alpha(inp), c2_alpha(inp), beta3(k)) <= ceiling:
            hi = mid
        else:
            lo = mid
    print(f"  n needed even if delta hit the ceiling: at least {hi:.2e}")
