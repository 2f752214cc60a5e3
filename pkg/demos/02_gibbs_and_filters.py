"""
Gibbs undershoot and filtering of discontinuous data
====================================================

A disc indicator is the worst case for a truncated Fourier series: the
projection overshoots at the edge and dips below zero outside it.  A filter
trades some L2 accuracy for positivity.  The Fejer (Cesaro) filter is a
convolution with a non-negative kernel, so its output never goes negative.
"""

from fgboltz.init_filter import FilterSpec, apply_filter, ball_indicator, check_conditions
from fgboltz.spectral import (
    PhysicalField, forward_transform, inverse_transform, lp_norm, make_config, sample, truncation_from_support,
)

R, L = truncation_from_support(1.0)

filters = [FilterSpec("none"), FilterSpec("exponential", 36.0, 4), FilterSpec("exponential", 10.0, 2),
           FilterSpec("fejer")]

print(f"{'N':>3} {'filter':>16} {'min value':>11} {'|f^-|_2':>10} {'L2 error':>10} {'mass gap':>9}")
for N in (8, 16, 32, 64):
    cfg = make_config(2, N, L, R)
    f0 = sample(cfg, ball_indicator(radius=0.5), 4)
    for filt in filters:
        fN = apply_filter(forward_transform(f0), filt)
        rep = check_conditions(fN, f0, eps=1e-3)
        back = inverse_transform(fN, 4)
        err = lp_norm(PhysicalField(cfg, 4, back.values - f0.values), 2)
        name = filt.kind if filt.kind != "exponential" else f"exp({filt.alpha:g},{filt.order})"
        print(f"{N:3d} {name:>16} {back.values.min():11.3e} "
              f"{rep.cond_d_negpart_l2:10.2e} {err:10.3e} {rep.cond_a_massgap:9.1e}")

# Unfiltered, the minimum stays near -0.1 at every N: the Gibbs dip narrows
# but does not get shallower, so |f^-|_2 decays only like a power of N.
# Exponential filters soften the dip without removing it.  Every filter keeps
# the mass exactly, and Fejer removes the negative part at the price of a
# larger L2 error.
