"""
Discretization error of the empirical correlation
=================================================

Simulates one pair of correlated Brownian paths on a fine grid, then looks
at how the correlation computed from n samples moves toward the fine-grid
value and how much of the gap the bias term explains.
"""

import numpy as np

from pathcorr import (bias_vector_continuous, correlation, decimate,
                      discrete_triple, fine_triple, simulate)

pair = simulate("bm", n=102_400, rho=0.5, seed=2)
rho = correlation(fine_triple(pair))
mu = bias_vector_continuous(pair).mu_scalar
print(f"fine-grid rho = {rho:.6f}, mu = {mu:.4f}")

# n (rho_n - rho) fluctuates around mu; the residual is the Gaussian part
for n in (16, 64, 256, 1024):
    rho_n = correlation(discrete_triple(decimate(pair, pair.n // n)))
    print(f"n={n:5d}  rho_n - rho = {rho_n - rho:+.2e}  n(rho_n - rho) - mu = {n * (rho_n - rho) - mu:+.3f}")

# the same path, viewed with fewer samples, is still a valid pair
coarse = decimate(pair, 1024)
print("coarse grid:", coarse.n, "values per path:", coarse.first.values.size)
print("first five coarse values:", np.round(coarse.first.values[:5], 4))
