"""
Dependence bounds for Bernoulli-shift fields
============================================

Given decay of the input coefficients, how fast do the output coefficients
decay? The exhaustive shift bound is compared with the closed-form
power-law rate, then the exponential case is shown.
"""

from narfield import ShiftRegularity, exp_decay_bound, power_decay_bound, shift_bound

reg = ShiftRegularity(d=2, l=1, p=4, b_kind="power", b=6, mu=9)
print("    r  shift bound   closed form   ratio")
for r in [16, 32, 64, 128, 256, 512, 1024]:
    exponent, closed = power_decay_bound(2, 4, 1, 9, r)
    s = shift_bound(reg, r)
    print(f"{r:5d}  {s:.4e}   {closed:.4e}   {s / closed:.2f}")
print("closed-form exponent:", exponent)

###############################################################################
# Exponentially decaying inputs: the bound is a power of r times (log r)^2,
# and that log factor makes the ratio to the bare power converge slowly.
for r in [10, 100, 1000, 10000]:
    b = exp_decay_bound(4, 1, 6, r)
    print(f"{r:6d}  {b:.4e}  ratio to r^-4: {b * r ** 4:.2f}")
