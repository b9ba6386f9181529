"""Random streams, Gaussian sampling primitives and small dense linear algebra.

Every stochastic routine in the package takes an :class:`RngStream` rather
than a stateful generator.  A stream is a value: the same
``(master_seed, stream_index)`` always yields the same numbers, and
independent pieces of work get independent streams through
:meth:`RngStream.child`.  That is what makes Monte Carlo results invariant to
how trials are scheduled across workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, TypeVar

import numpy as np
from scipy import special
from scipy.linalg import solve_triangular

from ._defaults import SAMPLER, TOL
from .errors import EmptyInterval, NotPositiveDefinite

_U64 = (1 << 64) - 1

T_ = TypeVar("T_")


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream identified by ``(master_seed, stream_index)``.

    Backed by the Philox-4x64 bijection, keyed by the pair; distinct keys give
    statistically independent streams.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "master_seed", int(self.master_seed) & _U64)
        object.__setattr__(self, "stream_index", int(self.stream_index) & _U64)

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        key = np.array([self.master_seed, self.stream_index], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, i: int) -> "RngStream":
        """Substream ``i`` of this stream (deterministic, collision-resistant)."""
        ss = np.random.SeedSequence(entropy=[self.stream_index, int(i) & _U64, 0x5EED])
        idx = int(ss.generate_state(1, np.uint64)[0])
        return RngStream(self.master_seed, idx)

    def to_dict(self) -> dict:
        return {"master_seed": self.master_seed, "stream_index": self.stream_index}


def as_stream(rng) -> RngStream:
    """Coerce an int seed (or an existing stream) into an :class:`RngStream`."""
    if isinstance(rng, RngStream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng), 0)
    raise TypeError(f"expected RngStream or int seed, got {type(rng).__name__}")


def map_trials(
    fn: Callable[[RngStream], T_], rng: RngStream, trials: int, workers: int = 1
) -> list[T_]:
    """Run ``fn`` once per trial on substream ``rng.child(trial)``.

    Output order is the trial order regardless of ``workers``.
    """
    streams = [rng.child(i) for i in range(trials)]
    if workers is None or workers <= 1 or trials <= 1:
        return [fn(s) for s in streams]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, streams))


# ---------------------------------------------------------------------------
# data carriers


@dataclass
class SampleBatch:
    """T x n block of samples, one row per draw, plus the stream it came from."""

    data: np.ndarray
    master_seed: Optional[int] = None
    stream_index: Optional[int] = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"SampleBatch needs a non-empty 2-d array, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("SampleBatch entries must be finite")
        self.data = data

    @property
    def T(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @classmethod
    def from_stream(cls, data, rng: RngStream) -> "SampleBatch":
        return cls(data, rng.master_seed, rng.stream_index)


@dataclass
class PsdMatrix:
    """Symmetric matrix with lazily cached Cholesky factor and log-determinant."""

    entries: np.ndarray
    chol: Optional[np.ndarray] = field(default=None, repr=False)
    logdet: Optional[float] = None

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.entries, dtype=float))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"PsdMatrix must be square, got shape {a.shape}")
        scale = max(np.max(np.abs(a)), np.finfo(float).tiny)
        if np.max(np.abs(a - a.T)) > TOL.symmetry_rel * scale:
            raise ValueError("PsdMatrix entries are not symmetric")
        self.entries = a

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    def factor(self) -> tuple[np.ndarray, float]:
        if self.chol is None or self.logdet is None:
            self.chol, self.logdet = chol_logdet(self.entries)
        return self.chol, self.logdet


# ---------------------------------------------------------------------------
# sampling primitives


def gaussian_batch(n: int, T: int, rng: RngStream) -> SampleBatch:
    """T i.i.d. draws from N(0, I_n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = as_stream(rng)
    return SampleBatch.from_stream(rng.generator().standard_normal((T, n)), rng)


def unit_sphere(n: int, rng: RngStream, size: Optional[int] = None) -> np.ndarray:
    """Haar-uniform unit vector(s) on S^{n-1}; shape ``(n,)`` or ``(size, n)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = as_stream(rng).generator()
    shape = (n,) if size is None else (size, n)
    while True:
        g = gen.standard_normal(shape)
        norms = np.linalg.norm(g, axis=-1, keepdims=True)
        if np.all(norms > 0):
            return g / norms


def truncated_normal(lo, hi, gen: np.random.Generator, size=None) -> np.ndarray:
    """Draws from N(0,1) conditioned on [lo, hi] by inverse-CDF transform.

    ``lo``/``hi`` broadcast against ``size``; infinite endpoints are allowed.
    Tails are handled in the complementary (log-survival) parametrization so
    that intervals far from the origin, e.g. [30, inf), remain exact.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo >= hi):
        raise EmptyInterval("truncation interval must satisfy lo < hi")
    shape = np.broadcast_shapes(lo.shape, hi.shape, () if size is None else tuple(np.atleast_1d(size)))
    lo = np.broadcast_to(lo, shape)
    hi = np.broadcast_to(hi, shape)
    u = 1.0 - gen.random(shape)  # (0, 1]
    out = np.empty(shape)

    upper = lo >= 0
    lower = hi <= 0
    mid = ~(upper | lower)

    if np.any(upper):
        out[upper] = _upper_tail(lo[upper], hi[upper], u[upper])
    if np.any(lower):
        out[lower] = -_upper_tail(-hi[lower], -lo[lower], u[lower])
    if np.any(mid):
        plo = special.ndtr(lo[mid])
        phi = special.ndtr(hi[mid])
        out[mid] = special.ndtri(plo + u[mid] * (phi - plo))
    return np.clip(out, lo, hi)


def _upper_tail(lo, hi, u):
    # 0 <= lo < hi: invert the survival function in log space
    log_a = special.log_ndtr(-lo)
    log_b = special.log_ndtr(-hi)
    ratio = np.exp(log_b - log_a)
    return -special.ndtri_exp(log_a + np.log(u + (1.0 - u) * ratio))


def truncated_normal_1d(lo: float, hi: float, rng: RngStream) -> float:
    """Single draw from N(0,1) restricted to [lo, hi]."""
    return float(truncated_normal(lo, hi, as_stream(rng).generator()))


# ---------------------------------------------------------------------------
# chi-square helpers


def log_gammainc_lower(a, x):
    """log P(a, x), the log regularized lower incomplete gamma function.

    Uses the power series where ``P`` would underflow, which is the regime
    the mixture lower-bound construction lives in (x far below a).
    """
    a, x = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(x, dtype=float))
    out = np.full(a.shape, -np.inf)
    pos = x > 0
    with np.errstate(divide="ignore"):
        direct = np.log(special.gammainc(a, x))
    use_direct = pos & (direct > -600.0)
    out[use_direct] = direct[use_direct]
    rest = pos & ~use_direct
    if np.any(rest):
        ar, xr = a[rest], x[rest]
        term = np.ones_like(ar)
        total = np.ones_like(ar)
        k = 0
        while True:
            k += 1
            term = term * xr / (ar + k)
            total = total + term
            if np.all(term < 1e-17 * total) or k > 100_000:
                break
        out[rest] = ar * np.log(xr) - xr - special.gammaln(ar + 1.0) + np.log(total)
    return out if out.ndim else float(out)


def log_chi2_cdf(x, df):
    """log Pr[chi^2(df) <= x], accurate deep into the lower tail."""
    return log_gammainc_lower(np.asarray(df, dtype=float) / 2.0, np.asarray(x, dtype=float) / 2.0)


def log_chi2_pdf(x, df):
    x = np.asarray(x, dtype=float)
    k = df / 2.0
    with np.errstate(divide="ignore"):
        return (k - 1.0) * np.log(x) - x / 2.0 - k * np.log(2.0) - special.gammaln(k)


def chi2_truncated_sample(df: float, upper: float, gen: np.random.Generator, size: int) -> np.ndarray:
    """Draws from chi^2(df) restricted to [0, upper] by inverting the regularized CDF.

    Uses scipy's ``gammaincinv``; any non-finite result falls back to
    bisection on ``gammainc``.
    """
    if upper <= 0:
        raise ValueError("upper must be positive")
    a = df / 2.0
    target = gen.random(size) * special.gammainc(a, upper / 2.0)
    x = 2.0 * special.gammaincinv(a, target)
    bad = ~np.isfinite(x)
    if np.any(bad):
        x[bad] = _chi2_bisect(a, upper, target[bad])
    return np.clip(x, 0.0, upper)


def _chi2_bisect(a, upper, target):
    lo = np.zeros_like(target)
    hi = np.full_like(target, float(upper))
    for _ in range(SAMPLER.bisection_iters):
        mid = 0.5 * (lo + hi)
        below = special.gammainc(a, mid / 2.0) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo) <= SAMPLER.bisection_tol * upper:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# linear algebra


def chol_logdet(A) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor and log-determinant of a symmetric matrix.

    Raises :class:`NotPositiveDefinite` when any pivot falls below
    ``1e-12 * max(diag)``.
    """
    a = A.entries if isinstance(A, PsdMatrix) else np.atleast_2d(np.asarray(A, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    diag_max = np.max(np.diag(a)) if a.size else 0.0
    if not diag_max > 0:
        raise NotPositiveDefinite("matrix has no positive diagonal entry")
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    piv = np.diag(L) ** 2
    if np.any(~np.isfinite(piv)) or np.min(piv) <= TOL.pivot_rel * diag_max:
        raise NotPositiveDefinite("Cholesky pivot below tolerance")
    return L, float(2.0 * np.sum(np.log(np.diag(L))))


def sym_eigvals_relative(S1, S2) -> np.ndarray:
    """Eigenvalues of S1^{-1} S2 via the symmetric similar matrix L^{-1} S2 L^{-T}."""
    L, _ = chol_logdet(S1)
    X = solve_triangular(L, np.asarray(S2, dtype=float), lower=True)
    M = solve_triangular(L, X.T, lower=True)
    return np.linalg.eigvalsh(0.5 * (M + M.T))
