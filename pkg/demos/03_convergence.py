"""
Self-convergence in N
=====================

The reference is the same solver at a finer N.  The time step is halved until
the reference stops moving, so what remains is the spatial (spectral) error.
For smooth data the error drops faster than any power of N: the local slopes
keep growing.  Small sizes here so the script runs in well under a minute.
"""

import math

from fgboltz import maxwell_kernel
from fgboltz.init_filter import double_bump
from fgboltz.integrator import RunConfig
from fgboltz.spectral import truncation_from_support
from fgboltz.verify import convergence_study

R, L = truncation_from_support(1.0)
profile = double_bump(L, T=0.09, shift=0.45)

table = convergence_study(
    profile, maxwell_kernel(), N_list=[4, 8, 16], N_ref=32, t_end=0.25,
    rc=RunConfig(0.25, 0.025), L=L, R=R, log=print,
)
print()
print(table.to_csv())
for N, s in zip(table.N_values[1:], table.local_slopes):
    print(f"slope up to N={N}: {s:.2f}")
assert all(math.isfinite(e) for e in table.errors)
