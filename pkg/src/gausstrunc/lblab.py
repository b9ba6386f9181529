"""Small-scale experiments behind the sample-complexity lower bounds.

Wishart draws and densities, the log-det CLT, Gaussian TV/Hellinger bounds,
the chi-square mixture whose radial law matches a shrunken Gaussian above a
cut point a*, the grid-union birthday experiment and power curves at a fixed
sample budget.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import integrate, special

from ._defaults import LAB
from .bodies import grid_union_random
from .core import (
    PsdMatrix,
    RngStream,
    SampleBatch,
    as_stream,
    chol_logdet,
    log_chi2_cdf,
    log_chi2_pdf,
    map_trials,
    sym_eigvals_relative,
)
from .errors import NotPositiveDefinite, RootNotBracketed
from .samplers import sample_truncated
from .testers import TestConfig, detection_rate

# ---------------------------------------------------------------------------
# Wishart


@dataclass(frozen=True)
class WishartParams:
    p: int
    n: int

    def __post_init__(self):
        if self.p < 1 or self.n < self.p:
            raise ValueError(f"need 1 <= p <= n, got p={self.p}, n={self.n}")


def wishart_sample(params: WishartParams, rng) -> PsdMatrix:
    """S = G G^T with G a p x n matrix of independent standard normals."""
    G = as_stream(rng).generator().standard_normal((params.p, params.n))
    S = G @ G.T
    return PsdMatrix(0.5 * (S + S.T))


def _factor(A) -> tuple[np.ndarray, float]:
    if isinstance(A, PsdMatrix):
        return A.factor()
    return chol_logdet(A)


def _entries(A) -> np.ndarray:
    return A.entries if isinstance(A, PsdMatrix) else np.asarray(A, dtype=float)


def wishart_log_density(A, params: WishartParams) -> float:
    """Log density of Wis(p, n) at a positive definite A."""
    p, n = params.p, params.n
    _, logdet = _factor(A)
    lg = special.gammaln((n + 1 - np.arange(1, p + 1)) / 2.0).sum()
    return float(
        (n - p - 1) / 2.0 * logdet
        - np.trace(_entries(A)) / 2.0
        - n * p / 2.0 * math.log(2.0)
        - p * (p - 1) / 4.0 * math.log(math.pi)
        - lg
    )


def alpha_pn(A, p: int, n: int) -> float:
    """log(Psi_{p,n}(A) / Psi_{p,n-1}(A)).

    Even p uses the product form logdet/2 - sum_{i=1}^{p/2} log(n - p + 2(i-1));
    odd p uses the equivalent log-gamma difference.
    """
    if n - p < 1:
        raise ValueError("alpha_pn needs p <= n - 1")
    _, logdet = _factor(A)
    if p % 2 == 0:
        i = np.arange(1, p // 2 + 1)
        return float(logdet / 2.0 - np.log(n - p + 2.0 * (i - 1)).sum())
    return float(logdet / 2.0 - p / 2.0 * math.log(2.0) - special.gammaln(n / 2.0)
                 + special.gammaln((n - p) / 2.0))


def estimate_tv_wishart(p: int, n: int, draws: int, rng, workers: int = 1) -> tuple[float, float]:
    """MC estimate of E_{W ~ Wis(p, n-1)} (1 - exp(alpha_pn(W)))_+ with its standard error."""
    if draws < 1000:
        raise ValueError("estimate_tv_wishart needs at least 1000 draws")
    params = WishartParams(p, n - 1)

    def one(s: RngStream) -> float:
        return max(0.0, -math.expm1(alpha_pn(wishart_sample(params, s), p, n)))

    vals = np.array(map_trials(one, as_stream(rng), draws, workers))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(draws))


@dataclass(frozen=True)
class CltCheck:
    mean: float
    std: float
    reference_std: float
    trials: int


def logdet_clt_check(p: int, n: int, trials: int, rng, workers: int = 1) -> CltCheck:
    """Spread of log(det W / ((n-1)(n-2)...(n-p))) for W ~ Wis(p, n).

    The reference standard deviation is sqrt(-2 log(1 - p/n)).
    """
    if not 0 < p < n:
        raise ValueError("need 0 < p < n")
    params = WishartParams(p, n)
    center = float(np.log(n - np.arange(1, p + 1, dtype=float)).sum())
    vals = np.array(map_trials(lambda s: wishart_sample(params, s).factor()[1] - center,
                               as_stream(rng), trials, workers))
    return CltCheck(float(vals.mean()), float(vals.std(ddof=1)),
                    math.sqrt(-2.0 * math.log1p(-p / n)), trials)


def gram_matrix(batch) -> PsdMatrix:
    """Pairwise inner products of the rows."""
    X = batch.data if isinstance(batch, SampleBatch) else np.atleast_2d(np.asarray(batch, dtype=float))
    G = X @ X.T
    return PsdMatrix(0.5 * (G + G.T))


# ---------------------------------------------------------------------------
# Gaussian distances


def gaussian_tv_bound(S1, S2) -> float:
    """(3/2) min(1, |eig(S1^{-1} S2) - 1|_2) upper bound on d_TV(N(0,S1), N(0,S2))."""
    A, B = _entries(S1), _entries(S2)
    if A.shape != B.shape:
        raise ValueError("covariances must have the same size")
    chol_logdet(B)  # raises NotPositiveDefinite
    lam = sym_eigvals_relative(A, B)
    return 1.5 * min(1.0, float(np.linalg.norm(lam - 1.0)))


def gaussian_tv_quadrature_2d(S1, S2) -> float:
    """d_TV(N(0,S1), N(0,S2)) in two dimensions by polar integration.

    After whitening by S1 and rotating, the radial integral at each angle has a
    closed form (the two densities cross at most once along a ray), leaving a
    one-dimensional quadrature over the angle.
    """
    lam = sym_eigvals_relative(S1, S2)
    if lam.shape != (2,):
        raise ValueError("2x2 covariances required")
    if np.any(lam <= 0):
        raise NotPositiveDefinite("S2 is not positive definite")
    l1, l2 = lam
    B = 1.0 / math.sqrt(l1 * l2)

    def radial(theta: float) -> float:
        # int_0^inf |e^{-s} - B e^{-b s}| ds with s = r^2/2
        b = math.cos(theta) ** 2 / l1 + math.sin(theta) ** 2 / l2
        if abs(b - 1.0) < 1e-15:
            return abs(1.0 - B)
        s = math.log(B) / (b - 1.0)
        if s <= 0:
            return abs(1.0 - B / b)
        head = abs((1.0 - math.exp(-s)) - B / b * (1.0 - math.exp(-b * s)))
        tail = abs(math.exp(-s) - B / b * math.exp(-b * s))
        return head + tail

    val, _ = integrate.quad(radial, 0.0, math.pi / 2.0, epsabs=1e-13, epsrel=1e-11, limit=200)
    return 0.5 * 4.0 * val / (2.0 * math.pi)


def hellinger_sq_gaussians(n: int, delta: float) -> float:
    """Squared Hellinger distance between N(0, I_n) and N(0, (1-delta) I_n)."""
    if not 0.0 <= delta < 1.0:
        raise ValueError("delta must lie in [0, 1)")
    log_ratio = n / 4.0 * math.log1p(-delta) - n / 2.0 * math.log1p(-delta / 2.0)
    return -math.expm1(log_ratio)


# ---------------------------------------------------------------------------
# chi-square mixture construction


@dataclass(frozen=True)
class MixtureLbParams:
    """Dimension n and shrink parameter delta, with 1 - delta = 1 / (1 + delta').

    ``delta`` defaults to C / n.
    """

    n: int
    delta: Optional[float] = None
    C: float = LAB.mixture_C

    def __post_init__(self):
        if self.n < 20:
            raise ValueError("the mixture construction needs n >= 20")
        d = self.C / self.n if self.delta is None else float(self.delta)
        if not 0.0 < d < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        object.__setattr__(self, "delta", d)

    @classmethod
    def from_delta_prime(cls, n: int, delta_prime: float) -> "MixtureLbParams":
        return cls(n, delta_prime / (1.0 + delta_prime))

    @property
    def delta_prime(self) -> float:
        return self.delta / (1.0 - self.delta)

    @property
    def log_c(self) -> float:
        n = self.n
        return (special.gammaln((n - 1) / 2.0) - special.gammaln(n / 2.0) - 0.5 * math.log(2.0)
                + n / 2.0 * math.log1p(self.delta_prime))


def log_abs_lambda(R, params: MixtureLbParams):
    """log |lambda(R)| of the untruncated weight; the sign is that of delta' R - 1."""
    R = np.asarray(R, dtype=float)
    dp = params.delta_prime
    with np.errstate(divide="ignore"):
        return (params.log_c - dp * R / 2.0 + np.log(np.abs(dp * R - 1.0)) - np.log(2.0 * np.sqrt(R))
                + log_chi2_cdf(R, params.n - 1))


def lambda_untruncated(R, params: MixtureLbParams):
    R = np.asarray(R, dtype=float)
    out = np.sign(params.delta_prime * R - 1.0) * np.exp(log_abs_lambda(R, params))
    return float(out) if out.ndim == 0 else out


def _scaled_integral(params, lo, hi, log_scale):
    # int_lo^hi lambda(R) exp(-log_scale) dR
    f = lambda R: np.sign(params.delta_prime * R - 1.0) * math.exp(float(log_abs_lambda(R, params)) - log_scale)  # noqa: E731
    pts = np.linspace(lo, hi, 9)[1:-1]
    val, _ = integrate.quad(f, lo, hi, points=pts, epsabs=0.0, epsrel=LAB.quad_epsrel, limit=500)
    return val


def _log_scale(params, lo, hi):
    grid = np.linspace(lo, hi, 257)[1:]
    return float(np.max(log_abs_lambda(grid, params)))


@dataclass(frozen=True)
class MixtureWeights:
    params: MixtureLbParams
    a_star: float

    def __call__(self, R):
        """Truncated weight: 0 below a*, the untruncated formula above."""
        R = np.asarray(R, dtype=float)
        out = np.where(R >= self.a_star, lambda_untruncated(np.maximum(R, 1e-300), self.params), 0.0)
        return float(out) if out.ndim == 0 else out

    def mass(self) -> float:
        """int_{a*}^inf lambda(R) dR by quadrature."""
        n = self.params.n
        f = lambda R: float(self(R))  # noqa: E731
        edges = sorted({self.a_star, max(self.a_star, n / 2.0), max(self.a_star, n),
                        max(self.a_star, 2.0 * n), max(self.a_star, 4.0 * n)})
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi > lo:
                total += integrate.quad(f, lo, hi, epsabs=1e-14, epsrel=LAB.quad_epsrel, limit=500)[0]
        total += integrate.quad(f, edges[-1], np.inf, epsabs=1e-14, epsrel=LAB.quad_epsrel, limit=500)[0]
        return total

    def tail_bound(self) -> float:
        """Pr[chi^2(n, 1/(1+delta')) <= a*], which bounds d_TV(S, p)."""
        p = self.params
        return float(special.gammainc(p.n / 2.0, (1.0 + p.delta_prime) * self.a_star / 2.0))


def mixture_lb_weights(params: MixtureLbParams) -> MixtureWeights:
    """Locate a* by bisection so that the signed mass of lambda on (0, a*) vanishes.

    All integrals are taken of lambda rescaled by its peak magnitude on the
    relevant interval, since lambda is exponentially small below 1/delta'.

    Raises
    ------
    RootNotBracketed
        If the positive mass on (1/delta', 50 n] never balances the negative mass.
    """
    inv = 1.0 / params.delta_prime
    s_neg = _log_scale(params, 0.0, inv)
    neg = -_scaled_integral(params, 0.0, inv, s_neg)  # > 0
    if not neg > 0:
        raise RootNotBracketed("negative part of lambda has no mass")
    log_target = s_neg + math.log(neg)

    def excess(a: float) -> float:
        s = _log_scale(params, inv, a)
        pos = _scaled_integral(params, inv, a, s)
        return (s + math.log(pos) if pos > 0 else -np.inf) - log_target

    lo, hi = inv, LAB.astar_outer_factor * params.n
    if hi <= lo or excess(hi) < 0:
        raise RootNotBracketed(f"no balance point in ({lo}, {hi}]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * hi:
            break
    return MixtureWeights(params, 0.5 * (lo + hi))


def log_p_density(x, params: MixtureLbParams):
    """log density of chi^2(n, 1/(1+delta')), i.e. |y|^2 for y ~ N(0, I_n / (1+delta'))."""
    s = 1.0 + params.delta_prime
    return math.log(s) + log_chi2_pdf(s * np.asarray(x, dtype=float), params.n)


def log_S_density(x: float, weights: MixtureWeights) -> float:
    """log S(x) = log int lambda(R) q_R(x) dR, integrating R over [max(x, a*), inf)."""
    p = weights.params
    dp = p.delta_prime
    lo = max(x, weights.a_star)
    # lambda/psi = c e^{-dp R/2} (dp R - 1) / (2 sqrt R); factor out e^{-dp lo/2}
    f = lambda R: math.exp(-dp * (R - lo) / 2.0) * (dp * R - 1.0) / (2.0 * math.sqrt(R))  # noqa: E731
    val = integrate.quad(f, lo, lo + 40.0 / dp, epsabs=0.0, epsrel=LAB.quad_epsrel, limit=500)[0]
    val += integrate.quad(f, lo + 40.0 / dp, np.inf, epsabs=0.0, epsrel=LAB.quad_epsrel, limit=500)[0]
    return float(log_chi2_pdf(x, p.n - 1) + p.log_c - dp * lo / 2.0 + math.log(val))


@dataclass(frozen=True)
class DensityCheck:
    a_star: float
    max_rel_error: float
    tail_bound: float
    grid: np.ndarray
    rel_errors: np.ndarray

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = self.grid.tolist()
        d["rel_errors"] = self.rel_errors.tolist()
        return d


def mixture_lb_density_check(params: MixtureLbParams, grid=None, weights: Optional[MixtureWeights] = None) -> DensityCheck:
    """Relative |S - p| / p over a grid on [a*, 3n] (50 points by default)."""
    w = weights or mixture_lb_weights(params)
    x = np.linspace(w.a_star, 3.0 * params.n, 50) if grid is None else np.asarray(grid, dtype=float)
    logS = np.array([log_S_density(xi, w) for xi in x])
    logp = log_p_density(x, params)
    rel = np.abs(np.expm1(logS - logp))
    return DensityCheck(w.a_star, float(rel.max()), w.tail_bound(), x, rel)


# ---------------------------------------------------------------------------
# grid union, slab typicality, power


@dataclass(frozen=True)
class BirthdayResult:
    distinct_frequency: float
    birthday_bound: float
    mean_M: float
    stderr_M: float
    n: int
    trials: int

    def to_dict(self) -> dict:
        return asdict(self)


def grid_birthday_demo(n: int, M: int, eps: float, N: int, trials: int, rng, workers: int = 1) -> BirthdayResult:
    """How often N draws from a random grid union land in distinct cells.

    One GridUnion keeping (1 - eps) M cells is drawn, then each trial samples N
    points from it.  ``mean_M`` pools |x|^2 over trials whose cells were all
    distinct; such samples are distributed exactly like N untruncated draws.
    """
    keep = 1.0 - eps
    if N * N > keep * M:
        raise ValueError("need N^2 <= (1 - eps) M")
    rng = as_stream(rng)
    body = grid_union_random(n, M, keep, rng.child(0))

    def one(s: RngStream):
        X = sample_truncated(body, N, s).data
        cells = body.cell_index(X)
        return np.unique(cells).size == N, np.einsum("ij,ij->i", X, X)

    results = map_trials(one, rng.child(1), trials, workers)
    distinct = np.array([d for d, _ in results])
    sq = np.concatenate([s for d, s in results if d]) if distinct.any() else np.array([np.nan])
    se = float(sq.std(ddof=1) / math.sqrt(sq.size)) if sq.size > 1 else float("nan")
    return BirthdayResult(float(distinct.mean()), 1.0 - N * N / (keep * M), float(sq.mean()), se, n, trials)


def slab_lb_typicality_probe(n: int, m: int, trials: int, rng, C1: float = LAB.typicality_C1,
                             workers: int = 1) -> float:
    """Frequency with which m standard Gaussian vectors in R^n are atypical.

    A tuple is atypical if some |g_i| / sqrt(n) leaves 1 +- C1 sqrt(log n / n),
    or some pair has |g_i . g_j| / n > C1 sqrt(log n / n).
    """
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    tol = C1 * math.sqrt(math.log(n) / n)

    def one(s: RngStream) -> bool:
        G = s.generator().standard_normal((m, n))
        W = G @ G.T / n
        norms = np.sqrt(np.diag(W))
        bad_a = np.any(np.abs(norms - 1.0) > tol)
        off = W[~np.eye(m, dtype=bool)]
        bad_b = off.size > 0 and np.any(np.abs(off) > tol)
        return bool(bad_a or bad_b)

    return float(np.mean(map_trials(one, as_stream(rng), trials, workers)))


def empirical_power_at_budget(spec, algorithm: str, T: int, trials: int, rng, eps: Optional[float] = None,
                              workers: int = 1) -> float:
    """Detection rate of a distinguisher run on ``trials`` truncated batches of size T."""
    if trials < 100:
        raise ValueError("need at least 100 trials")
    from .bodies import as_spec

    spec = as_spec(spec)
    config = TestConfig(spec.n, eps, T, algorithm)
    return detection_rate(spec, config, trials, rng, workers)[0]
