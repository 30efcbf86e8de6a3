"""
Null distribution of the standardized statistic
===============================================

Replicates the continuous-proxy Brownian statistic and prints moments,
the KS distance to N(0, 1) and a text histogram.
"""

import numpy as np

from pathcorr import McConfig, chi_square_normal, run_mc

for n in (8, 32):
    s = run_mc(McConfig(model="bm", rho=0.7, coarse_n=n, fine_factor=50, reps=2000, seed=1, bins=17))
    print(f"n={n}: mean {s.mean:+.3f}  std {s.std:.3f}  KS {s.ks_distance:.4f} "
          f"(crit {s.ks_critical:.4f})  chi2 p {chi_square_normal(s):.3f}")

scale = 60 / s.counts.max()
for lo, c in zip(s.bin_edges[:-1], s.counts):
    print(f"{lo:+5.2f} {'#' * int(round(c * scale))}")
