"""
Sampling a Gaussian conditioned on a convex body
================================================

Every body in ``gausstrunc`` has an exact sampler except intersections,
which fall back to rejection.  This walk-through draws from a few of them
and checks the draws against what we know in closed form.
"""

# %%
import numpy as np
from scipy import stats

from gausstrunc import Ball, Halfspace, Hyperplane, RngStream, Slab, axis, exact_volume, matched_body
from gausstrunc import sample_truncated
from gausstrunc.samplers import SamplerPlan

rng = RngStream(2024)

# %% [markdown]
# A halfspace ``x_1 >= 1`` in ten dimensions.  The first coordinate is a
# one-sided truncated normal, the other nine are untouched.

# %%
X = sample_truncated(Halfspace(axis(10), 1.0), 20_000, rng.child(0)).data
print("min x_1:", X[:, 0].min())
print("KS on x_1 vs N(0,1) | x_1 >= 1:",
      stats.kstest(X[:, 0], stats.truncnorm(1.0, np.inf).cdf).pvalue)
print("sd of remaining coordinates:", X[:, 1:].std(axis=0).round(3))

# %% [markdown]
# Bodies can be sized by Gaussian volume.  ``matched_body`` returns the slab
# or ball that removes exactly ``eps`` of the mass.

# %%
for kind in ("slab", "ball"):
    body = matched_body(kind, 50, 0.5)
    print(kind, body, "volume", round(exact_volume(body), 12))

# %% [markdown]
# The ball sampler draws a direction and an independent radius from the
# truncated chi-square law, so tiny balls cost the same as big ones.

# %%
tiny = Ball(50, 3.0)
print("vol of the radius-3 ball in 50 dims: %.3g" % exact_volume(tiny))
Y = sample_truncated(tiny, 5, rng.child(1)).data
print("norms:", np.linalg.norm(Y, axis=1).round(4))

# %% [markdown]
# A hyperplane is a zero-volume limit of thin slabs.  Its sample has an exact
# zero along the normal and chi-square(n - 1) squared norms.

# %%
Z = sample_truncated(Hyperplane(axis(20)), 10_000, rng.child(2)).data
print("max |x_1|:", np.abs(Z[:, 0]).max())
print("mean |x|^2:", (Z**2).sum(1).mean(), "(n - 1 = 19)")

# %% [markdown]
# Forcing rejection on a narrow slab shows why the exact strategies matter.

# %%
narrow = Slab(axis(5), 0.05)
plan = SamplerPlan.default(narrow, force_rejection=True)
print("plan:", plan.strategies, "attempt cap", plan.max_attempts)
W = sample_truncated(narrow, 200, rng.child(3), plan=plan).data
print("all inside:", bool(np.all(np.abs(W[:, 0]) <= 0.05)))
