"""Distinguishers for truncated versus untruncated N(0, I_n) samples.

Three tests are provided:

``symm``
    declares truncation when the mean squared norm M falls below n - c eps / 2.
    Sound against (mixtures of) symmetric convex truncations.
``convex``
    adds a robust-mean branch: also declares truncation when the
    median-of-means estimate L has |L|^2 >= 0.05.
``ltf``
    for halfspaces: declares truncation when N = |mean|^2 >= n/T + c eps^2.

The absolute constants are operational choices collected in
:mod:`gausstrunc._defaults`.  When only T is given, the distance parameter
used in the thresholds is recovered by inverting the sample-size rule.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import optimize

from ._defaults import TESTER
from .core import RngStream, SampleBatch, as_stream, gaussian_batch, map_trials
from .errors import TooFewSamples

ALGORITHMS = ("symm", "convex", "ltf")
UNTRUNCATED = "untruncated"
TRUNCATED = "truncated"


class UnderpoweredWarning(UserWarning):
    pass


def _ltf_size(eps: float, n: int, C: float) -> float:
    return C * math.sqrt(n) / eps**2 + C * math.log(1.0 / eps) ** 2 / eps**4


@dataclass(frozen=True)
class TestConfig:
    """Parameters of one distinguisher run.

    Either ``eps`` or ``T`` (or both) must be supplied.  ``T`` defaults to the
    sample-size rule of the chosen algorithm; ``eps_eff`` is ``eps`` when given
    and otherwise the value for which the rule would yield ``T``.
    """

    __test__ = False  # not a pytest class

    n: int
    eps: Optional[float] = None
    T: Optional[int] = None
    algorithm: str = "symm"
    c_sym: float = TESTER.c_sym
    C_sample: float = TESTER.C_sample
    L_threshold: float = TESTER.L_threshold
    N_threshold_c: float = TESTER.N_threshold_c
    delta: float = TESTER.mean_estimator_delta

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.eps is None and self.T is None:
            raise ValueError("need eps or T")
        if self.eps is not None and not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if self.T is None:
            object.__setattr__(self, "T", self.required_T())
        if self.T < 1:
            raise ValueError("T must be >= 1")
        object.__setattr__(self, "T", int(self.T))

    def required_T(self, eps: Optional[float] = None) -> int:
        eps = self.eps if eps is None else eps
        if self.algorithm == "ltf":
            return math.ceil(_ltf_size(eps, self.n, self.C_sample))
        return math.ceil(self.C_sample * self.n / eps**2)

    @property
    def eps_eff(self) -> float:
        if self.eps is not None:
            return self.eps
        if self.algorithm != "ltf":
            return math.sqrt(self.C_sample * self.n / self.T)
        f = lambda e: _ltf_size(e, self.n, self.C_sample) - self.T  # noqa: E731
        if f(0.999999) > 0:  # budget below the rule's floor; extend the sqrt(n) term
            return math.sqrt(self.C_sample * math.sqrt(self.n) / self.T)
        return optimize.brentq(f, 1e-6, 0.999999, xtol=1e-14)

    @property
    def underpowered(self) -> bool:
        return self.eps is not None and self.T < self.required_T()

    def thresholds(self) -> dict:
        e = self.eps_eff
        out = {"M": self.n - self.c_sym * e / 2.0}
        if self.algorithm == "convex":
            out["L_normsq"] = self.L_threshold
        if self.algorithm == "ltf":
            out = {"N": self.n / self.T + self.N_threshold_c * e**2}
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eps_eff"] = self.eps_eff
        return d


@dataclass
class TestReport:
    __test__ = False

    algorithm: str
    verdict: str
    n: int
    T: int
    eps_eff: float
    statistic_M: float
    thresholds: dict
    statistic_L_normsq: Optional[float] = None
    statistic_N: Optional[float] = None
    master_seed: Optional[int] = None
    stream_index: Optional[int] = None
    warnings: list = field(default_factory=list)

    @property
    def truncated(self) -> bool:
        return self.verdict == TRUNCATED

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# statistics


def _data(batch) -> np.ndarray:
    return batch.data if isinstance(batch, SampleBatch) else np.atleast_2d(np.asarray(batch, dtype=float))


def statistic_M(batch) -> float:
    """Mean squared norm (1/T) sum_i |x_i|^2."""
    X = _data(batch)
    return float(np.einsum("ij,ij->", X, X) / X.shape[0])


def statistic_N(batch) -> float:
    """Squared norm of the empirical mean."""
    mu = _data(batch).mean(axis=0)
    return float(mu @ mu)


def geometric_median(points: np.ndarray, steps: int = TESTER.weiszfeld_steps,
                     tol: float = TESTER.weiszfeld_tol) -> np.ndarray:
    """Weiszfeld iteration started at the coordinate-wise mean."""
    P = np.asarray(points, dtype=float)
    if np.all(P == P[0]):
        return P[0].copy()
    y = P.mean(axis=0)
    for _ in range(steps):
        d = np.linalg.norm(P - y, axis=1)
        hit = d < 1e-300
        if np.any(hit):  # iterate sits on a data point
            return P[np.argmax(hit)].copy()
        w = 1.0 / d
        y_new = (w[:, None] * P).sum(axis=0) / w.sum()
        if np.linalg.norm(y_new - y) <= tol * max(1.0, np.linalg.norm(y)):
            y = y_new
            break
        y = y_new
    # Weiszfeld crawls towards a minimiser that is itself a data point; check those directly
    cost = lambda z: np.linalg.norm(P - z, axis=1).sum()  # noqa: E731
    costs = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2).sum(axis=1)
    i = int(np.argmin(costs))
    return P[i].copy() if costs[i] <= cost(y) else y


def mean_estimator(batch, delta: float = TESTER.mean_estimator_delta) -> np.ndarray:
    """Median-of-means estimate of the mean.

    Rows are split into k = ceil(8 log(1/delta)) contiguous blocks and the
    geometric median of the block means is returned.

    Raises
    ------
    TooFewSamples
        If there are fewer rows than blocks.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    X = _data(batch)
    k = math.ceil(8.0 * math.log(1.0 / delta))
    if X.shape[0] < k:
        raise TooFewSamples(f"need at least {k} rows for delta={delta}, got {X.shape[0]}")
    if np.all(X == X[0]):
        return X[0].copy()
    means = np.array([b.mean(axis=0) for b in np.array_split(X, k)])
    return geometric_median(means)


# ---------------------------------------------------------------------------
# distinguishers


def _report(config: TestConfig, batch, verdict, M, **extra) -> TestReport:
    notes = []
    if config.underpowered:
        notes.append(f"underpowered: T={config.T} < required {config.required_T()}")
    if isinstance(batch, SampleBatch) and batch.T != config.T:
        notes.append(f"batch has {batch.T} rows, config says T={config.T}")
    seed = batch.master_seed if isinstance(batch, SampleBatch) else None
    stream = batch.stream_index if isinstance(batch, SampleBatch) else None
    for note in notes:
        warnings.warn(note, UnderpoweredWarning, stacklevel=3)
    return TestReport(config.algorithm, verdict, config.n, config.T, config.eps_eff, M,
                      config.thresholds(), master_seed=seed, stream_index=stream,
                      warnings=notes, **extra)


def _check_dim(batch, config):
    if _data(batch).shape[1] != config.n:
        raise ValueError(f"batch dimension {_data(batch).shape[1]} != config n={config.n}")


def symm_convex_distinguisher(batch, config: TestConfig) -> TestReport:
    """Mean squared norm test; equality with the threshold counts as untruncated."""
    config = config if config.algorithm == "symm" else replace(config, algorithm="symm")
    _check_dim(batch, config)
    M = statistic_M(batch)
    verdict = TRUNCATED if M < config.thresholds()["M"] else UNTRUNCATED
    return _report(config, batch, verdict, M)


def convex_distinguisher(batch, config: TestConfig) -> TestReport:
    """Squared-norm test plus robust-mean test."""
    config = config if config.algorithm == "convex" else replace(config, algorithm="convex")
    _check_dim(batch, config)
    M = statistic_M(batch)
    L = mean_estimator(batch, config.delta)
    Lsq = float(L @ L)
    th = config.thresholds()
    verdict = TRUNCATED if (M < th["M"] or Lsq >= th["L_normsq"]) else UNTRUNCATED
    return _report(config, batch, verdict, M, statistic_L_normsq=Lsq)


def ltf_distinguisher(batch, config: TestConfig) -> TestReport:
    """Squared norm of the empirical mean against n/T + c eps^2."""
    config = config if config.algorithm == "ltf" else replace(config, algorithm="ltf")
    _check_dim(batch, config)
    N = statistic_N(batch)
    verdict = TRUNCATED if N >= config.thresholds()["N"] else UNTRUNCATED
    return _report(config, batch, verdict, statistic_M(batch), statistic_N=N)


DISTINGUISHERS = {
    "symm": symm_convex_distinguisher,
    "convex": convex_distinguisher,
    "ltf": ltf_distinguisher,
}


def run_distinguisher(batch, config: TestConfig) -> TestReport:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnderpoweredWarning)
        return DISTINGUISHERS[config.algorithm](batch, config)


# ---------------------------------------------------------------------------
# calibration


@dataclass(frozen=True)
class Calibration:
    algorithm: str
    alpha0: float
    threshold: float
    constant: float
    eps_eff: float
    trials: int

    def apply(self, config: TestConfig) -> TestConfig:
        """Return ``config`` with the calibrated constant substituted."""
        key = "N_threshold_c" if self.algorithm == "ltf" else "c_sym"
        return replace(config, **{key: self.constant})

    def to_dict(self) -> dict:
        return asdict(self)


def null_statistics(algorithm: str, n: int, T: int, trials: int, rng, workers: int = 1) -> np.ndarray:
    """The test statistic (M, or N for ``ltf``) on ``trials`` independent null batches."""
    stat = statistic_N if algorithm == "ltf" else statistic_M
    return np.array(map_trials(lambda s: stat(gaussian_batch(n, T, s)), as_stream(rng), trials, workers))


def calibrate_threshold(algorithm: str, n: int, eps: Optional[float], T: Optional[int],
                        alpha0: float, trials: int, rng, workers: int = 1) -> Calibration:
    """Empirical null quantile of the statistic, mapped back to the threshold constant.

    For ``symm``/``convex`` the threshold is the alpha0-quantile of M (the test
    rejects on small M) and ``constant`` is the matching c in n - c eps / 2.  For
    ``ltf`` it is the (1 - alpha0)-quantile of N and the c in n/T + c eps^2.
    """
    if trials < 500:
        raise ValueError("calibration needs at least 500 trials")
    if not 0.0 < alpha0 < 1.0:
        raise ValueError("alpha0 must lie in (0, 1)")
    config = TestConfig(n, eps, T, algorithm)
    stats = null_statistics(algorithm, n, config.T, trials, rng, workers)
    e = config.eps_eff
    if algorithm == "ltf":
        q = float(np.quantile(stats, 1.0 - alpha0))
        c = (q - n / config.T) / e**2
    else:
        q = float(np.quantile(stats, alpha0))
        c = 2.0 * (n - q) / e
    return Calibration(algorithm, alpha0, q, c, e, trials)


def detection_rate(spec, config: TestConfig, trials: int, rng, workers: int = 1) -> tuple[float, np.ndarray]:
    """Fraction of ``trials`` truncated batches flagged, plus the per-trial verdicts."""
    from .samplers import sample_truncated

    def one(s: RngStream) -> bool:
        return run_distinguisher(sample_truncated(spec, config.T, s), config).truncated

    hits = np.array(map_trials(one, as_stream(rng), trials, workers), dtype=bool)
    return float(hits.mean()), hits
