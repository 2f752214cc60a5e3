"""
How large can the collision operator get?
=========================================

The gain and loss parts obey bilinear estimates of the form
|Q(g, f)|_p <= C |g|_1 |f|_p.  Sampling random fields gives lower bounds on
the constants; if the estimates hold, the running maximum levels off.
"""

import numpy as np

from fgboltz import AngularKernel, KernelSpec, build_weight_table
from fgboltz.spectral import make_config, truncation_from_support
from fgboltz.verify import check_bilinear_bounds

R, L = truncation_from_support(1.0)

cfg = make_config(2, 8, L, R)
kernels = {
    "Maxwell": KernelSpec("hard", 0.0, AngularKernel.constant()),
    "hard, gamma=1": KernelSpec("hard", 1.0, AngularKernel.linear(0.2, 0.1)),
    "soft, gamma=-1/2": KernelSpec("modified_soft", -0.5, AngularKernel.constant()),
}

for name, spec in kernels.items():
    table = build_weight_table(cfg, spec)
    print(f"\n{name}")
    for p in (1, 2, "inf"):
        rep = check_bilinear_bounds(table, p=p, samples=300, seed=1)
        full = rep.history["full"]
        running = np.maximum.accumulate(full)
        marks = ", ".join(f"{running[i]:.4f}" for i in (9, 49, 149, 299))
        print(f"  p={p!s:>3}: gain {rep.max_ratio_gain:.4f} loss {rep.max_ratio_loss:.4f} "
              f"| running max of full ratio at 10/50/150/300 samples: {marks}")

# Phi is bounded on the ball of radius R, which is what keeps these finite;
# the hard kernel's ratios are larger because Phi grows to R^gamma there
