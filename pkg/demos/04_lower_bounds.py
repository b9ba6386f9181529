"""
Why about n samples are needed
==============================

Small-scale versions of the lower-bound computations: the Wishart reduction
for hyperplane truncations, Gaussian distance bounds, a chi-square mixture
that mimics a shrunken Gaussian, and the grid-union birthday experiment.
"""

# %%
import numpy as np

from gausstrunc import Hyperplane, RngStream, axis
from gausstrunc.lblab import (
    MixtureLbParams,
    empirical_power_at_budget,
    estimate_tv_wishart,
    gaussian_tv_bound,
    gaussian_tv_quadrature_2d,
    grid_birthday_demo,
    hellinger_sq_gaussians,
    logdet_clt_check,
    mixture_lb_density_check,
    mixture_lb_weights,
)

rng = RngStream(3)

# %% [markdown]
# With p samples truncated to a random hyperplane, the Gram matrix is
# Wis(p, n-1) instead of Wis(p, n).  The estimated total variation between
# the two is small while p << n and grows with p.

# %%
for p in (5, 50, 150):
    tv, se = estimate_tv_wishart(p, 400, 1000, rng.child(p))
    print(f"p={p:3d} n=400  TV ~ {tv:.3f} +- {se:.3f}")

# %% [markdown]
# The normalized log-determinant is close to Gaussian with spread
# sqrt(-2 log(1 - p/n)).

# %%
chk = logdet_clt_check(100, 200, 500, rng.child(0))
print(f"mean {chk.mean:.3f}, std {chk.std:.3f}, reference {chk.reference_std:.3f}")

# %% [markdown]
# Power of the squared-norm test against the hyperplane, below and above
# the linear budget.

# %%
n = 200
for T in (n // 10, n, 20 * n):
    print(f"T={T:5d}  power {empirical_power_at_budget(Hyperplane(axis(n)), 'symm', T, 200, rng.child(T)):.2f}")

# %% [markdown]
# Covariance-based TV upper bound against the two-dimensional quadrature.

# %%
S1 = np.eye(2)
S2 = np.array([[1.1, 0.05], [0.05, 0.95]])
print("bound", gaussian_tv_bound(S1, S2), "quadrature", gaussian_tv_quadrature_2d(S1, S2))
print("Hellinger^2, n=100 delta=0.01:", hellinger_sq_gaussians(100, 0.01))

# %% [markdown]
# The chi-square mixture: weights below a* are cut off, and above a* the
# mixture density coincides with the shrunken Gaussian's radial law.

# %%
params = MixtureLbParams(200)
w = mixture_lb_weights(params)
dc = mixture_lb_density_check(params, weights=w)
print(f"a* = {w.a_star:.4f} (1/delta' = {1 / params.delta_prime:.1f}), mass {w.mass():.12f}")
print(f"max relative gap on [a*, 3n]: {dc.max_rel_error:.1e}")

# %% [markdown]
# A union of half of a million equal-volume grid cells: 100 draws almost
# never share a cell, and then they look exactly like untruncated draws.

# %%
res = grid_birthday_demo(2, 10**6, 0.5, 100, 300, rng.child(1))
print(res.to_dict())
