"""Mills ratio, one-sided truncated-Gaussian moments and convex-influence estimators.

The convex influence of a direction v on a set K is

    Inf_v[K] = E_{x ~ N(0, I_n)}[ K(x) (1 - <v, x>^2) / sqrt(2) ]

and the total influence replaces ``1 - <v,x>^2`` with ``n - |x|^2``.  For a
mixture the indicator is replaced by the weighted sum of indicators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

from .bodies import as_spec
from .core import RngStream, as_stream

SQRT2 = math.sqrt(2.0)
_CHUNK = 65536


def mills_ratio(b):
    """R(b) = (1 - Phi(b)) / phi(b).

    The direct quotient is used for b <= 5; above that both numerator and
    denominator are tiny and the scaled complementary error function is used.
    """
    b = np.asarray(b, dtype=float)
    if np.any(np.abs(b) > 40):
        raise ValueError("mills_ratio is only supported for |b| <= 40")
    with np.errstate(over="ignore", invalid="ignore"):
        direct = special.ndtr(-b) / (np.exp(-0.5 * b * b) / math.sqrt(2.0 * math.pi))
    scaled = math.sqrt(math.pi / 2.0) * special.erfcx(b / SQRT2)
    out = np.where(b > 5.0, scaled, direct)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TruncatedMoments:
    """Raw moments of N(0,1) restricted to [b, inf)."""

    b: float
    M1: float
    M2: float
    M3: float
    M4: float

    @property
    def variance(self) -> float:
        return self.M2 - self.M1**2


def truncated_moments(b: float) -> TruncatedMoments:
    b = float(b)
    if abs(b) > 40:
        raise ValueError("truncated_moments is only supported for |b| <= 40")
    # phi(b) / (1 - Phi(b)) directly on the left, where R(b) overflows
    inv_r = math.exp(-0.5 * b * b) / math.sqrt(2 * math.pi) / special.ndtr(-b) if b < 0 else 1.0 / mills_ratio(b)
    return TruncatedMoments(
        b=b,
        M1=inv_r,
        M2=1.0 + b * inv_r,
        M3=(2.0 + b * b) * inv_r,
        M4=3.0 + (b**3 + 3.0 * b) * inv_r,
    )


@dataclass(frozen=True)
class InfluenceEstimate:
    direction: Union[np.ndarray, str]
    value: float
    stderr: float
    trials: int


def indicator(spec, X: np.ndarray) -> np.ndarray:
    """Weighted membership sum_i w_i K_i(x) for each row of X."""
    spec = as_spec(spec)
    out = np.zeros(X.shape[0])
    for w, body in spec.components:
        out += w * body._contains(X)
    return out


def _probe_chunks(n: int, trials: int, rng: RngStream):
    for j, start in enumerate(range(0, trials, _CHUNK)):
        m = min(_CHUNK, trials - start)
        yield rng.child(j).generator().standard_normal((m, n))


def _moments(values_iter, trials: int) -> tuple[float, float]:
    # fixed-order reduction over chunks; Welford merge keeps it stable
    count, mean, m2 = 0, 0.0, 0.0
    for vals in values_iter:
        k = vals.size
        mu = float(vals.mean())
        ss = float(((vals - mu) ** 2).sum())
        delta = mu - mean
        tot = count + k
        mean += delta * k / tot
        m2 += ss + delta * delta * count * k / tot
        count = tot
    sd = math.sqrt(m2 / (count - 1)) if count > 1 else 0.0
    return mean, sd / math.sqrt(trials)


def convex_influence(spec, v, trials: int, rng) -> InfluenceEstimate:
    """Monte Carlo estimate of Inf_v[K] with its standard error."""
    if trials < 1000:
        raise ValueError("convex_influence needs at least 1000 trials")
    spec = as_spec(spec)
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("v must be a unit vector")
    rng = as_stream(rng)
    vals = (indicator(spec, X) * (1.0 - (X @ v) ** 2) / SQRT2 for X in _probe_chunks(spec.n, trials, rng))
    value, se = _moments(vals, trials)
    return InfluenceEstimate(v, value, se, trials)


def total_convex_influence(spec, trials: int, rng) -> InfluenceEstimate:
    """Monte Carlo estimate of TInf[K] = E[K(x) (n - |x|^2)] / sqrt(2)."""
    if trials < 1000:
        raise ValueError("total_convex_influence needs at least 1000 trials")
    spec = as_spec(spec)
    n = spec.n
    rng = as_stream(rng)
    vals = (indicator(spec, X) * (n - np.einsum("ij,ij->i", X, X)) / SQRT2
            for X in _probe_chunks(n, trials, rng))
    value, se = _moments(vals, trials)
    return InfluenceEstimate("total", value, se, trials)


@dataclass(frozen=True)
class IdentityCheck:
    """Both sides of E_{N|K}|x|^2 = n - sqrt(2) TInf / vol.

    ``via_influence`` uses TInf and vol estimated on one shared probe batch;
    ``conditional_sq_norm`` comes from the exact sampler on an independent
    substream.  ``stderr`` is the joint standard error of their difference.
    """

    volume: float
    total_influence: float
    via_influence: float
    via_influence_stderr: float
    conditional_sq_norm: float
    conditional_stderr: float

    @property
    def discrepancy(self) -> float:
        return self.via_influence - self.conditional_sq_norm

    @property
    def stderr(self) -> float:
        return math.hypot(self.via_influence_stderr, self.conditional_stderr)


def influence_identity_check(spec, trials: int, rng) -> IdentityCheck:
    from .samplers import sample_truncated

    spec = as_spec(spec)
    n = spec.n
    rng = as_stream(rng)
    k_sum = ks_sum = ks2 = kk = kks = 0.0
    for X in _probe_chunks(n, trials, rng.child(0)):
        k = indicator(spec, X)
        s = np.einsum("ij,ij->i", X, X)
        k_sum += k.sum()
        ks_sum += (k * s).sum()
        kk += (k * k).sum()
        kks += (k * k * s).sum()
        ks2 += (k * s * k * s).sum()
    vol = k_sum / trials
    tinf = (n * k_sum - ks_sum) / trials / SQRT2
    via = n - SQRT2 * tinf / vol
    # delta method for the ratio E[K s] / E[K]
    var = (ks2 - 2 * via * kks + via**2 * kk) / trials - (ks_sum / trials - via * vol) ** 2
    via_se = math.sqrt(max(var, 0.0) / trials) / vol

    Y = sample_truncated(spec, trials, rng.child(1)).data
    sq = np.einsum("ij,ij->i", Y, Y)
    return IdentityCheck(vol, tinf, via, via_se, float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(trials)))


@dataclass(frozen=True)
class IsoperimetricBound:
    bound: float
    profile: float


def gaussian_isoperimetric_lb(eps: float) -> IsoperimetricBound:
    """Linear lower bound sqrt(2/pi) min(eps, 1-eps) and the profile phi(Phi^{-1}(eps))."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    z = special.ndtri(eps)
    profile = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return IsoperimetricBound(math.sqrt(2.0 / math.pi) * min(eps, 1.0 - eps), profile)
