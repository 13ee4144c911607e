# How big do the intermediates get, and does a [2,30] word hold them?
import numpy as np

from thomascore import FixedBackend, TridiagonalSystem, thomas_hw
from thomascore.bounds import check_range_conditions, compute_bounds, theorem_status
from thomascore.fixed_point import FixedFormat, from_real

fmt = FixedFormat.parse("[2,30]")
print(fmt, "range", fmt.min_value, "..", fmt.max_value, "ulp", fmt.ulp)
print("1/3 ->", from_real(1 / 3, fmt).to_real())

A = TridiagonalSystem([0, 0.5, 0.5], [2, 2.1, 2.2], [0.5, 0.5, 0], [0.3, -0.2, 0.1])
rep = compute_bounds(A)
tr = thomas_hw(A)
print(f"min|d| {tr.d.min():.4f}  bound {rep.d_lower:.4f}")
print(f"max|d| {tr.d.max():.4f}  bounds {rep.d_upper_tight:.4f} / {rep.d_upper_loose:.4f}")
for k, v in theorem_status(A).items():
    print(f"  {k:<14} {v}")

# sufficient conditions for staying below Z
prop = check_range_conditions(A, Z=2.0)
print(prop.to_dict())

# the pricing systems: scaled call payoff through the fixed backend
from thomascore.pricer import GridSpec, MarketParams, build_coefficients, payoff, scale_payoff

g = GridSpec(100, 1000, 2.0)
C = build_coefficients(MarketParams(0.03, 0.25), g, stencil="halved")
y, k = scale_payoff(payoff(g.S, 1.0), 2.0, C.b[0], np.max(np.abs(C.a)))
S = C.with_rhs(y)
fx = thomas_hw(S, FixedBackend(fmt, overflow="saturate"))
print("overflow events:", fx.overflow_events)
print(f"max |x_fixed - x_real| = {np.max(np.abs(fx.x - thomas_hw(S).x)) / k:.2e} (price units)")
