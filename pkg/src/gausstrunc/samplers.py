"""Exact and rejection samplers for N(0, I_n) restricted to a body, and mixtures thereof.

Rows are produced in fixed-size blocks.  Block ``j`` draws everything it needs
from ``rng.child(j)``, so the output depends only on the stream and ``T``
and never on how many worker threads assemble it.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._defaults import SAMPLER
from .bodies import (
    Ball,
    ConvexBody,
    GridUnion,
    Halfspace,
    Hyperplane,
    Intersection,
    Slab,
    TruncationSpec,
    as_spec,
    mc_volume,
)
from .core import RngStream, SampleBatch, as_stream, chi2_truncated_sample, truncated_normal
from .errors import RejectionExhausted

EXACT_AXIS = "exact_axis"
EXACT_RADIAL = "exact_radial"
SUBSPACE = "subspace"
EXACT_CELL = "exact_cell"
REJECTION = "rejection"

_VALID = {
    Halfspace: {EXACT_AXIS, REJECTION},
    Slab: {EXACT_AXIS, REJECTION},
    Ball: {EXACT_RADIAL, REJECTION},
    Hyperplane: {SUBSPACE},
    GridUnion: {EXACT_CELL, REJECTION},
    Intersection: {REJECTION},
}

_DEFAULT = {
    Halfspace: EXACT_AXIS,
    Slab: EXACT_AXIS,
    Ball: EXACT_RADIAL,
    Hyperplane: SUBSPACE,
    GridUnion: EXACT_CELL,
    Intersection: REJECTION,
}


@dataclass(frozen=True)
class SamplerPlan:
    """A truncation spec together with the strategy used for each component."""

    spec: TruncationSpec
    strategies: tuple
    max_attempts: int = SAMPLER.max_attempts

    def __post_init__(self):
        if len(self.strategies) != len(self.spec.components):
            raise ValueError("one strategy per component is required")
        for body, strat in zip(self.spec.bodies, self.strategies):
            if strat not in _VALID[type(body)]:
                raise ValueError(f"strategy {strat!r} is not valid for {body.variant}")
        # enough headroom for ~20 proposals per accepted row on the smallest known volume
        need = self.max_attempts
        for body, strat in zip(self.spec.bodies, self.strategies):
            vol = body.exact_volume()
            if strat == REJECTION and vol:
                need = max(need, math.ceil(20.0 / vol))
        object.__setattr__(self, "max_attempts", int(need))

    @classmethod
    def default(cls, spec, max_attempts: int = SAMPLER.max_attempts, force_rejection: bool = False):
        spec = as_spec(spec)
        strategies = []
        for body in spec.bodies:
            if force_rejection and REJECTION in _VALID[type(body)]:
                strategies.append(REJECTION)
            else:
                strategies.append(_DEFAULT[type(body)])
        return cls(spec, tuple(strategies), max_attempts)


# ---------------------------------------------------------------------------
# per-body kernels; each takes a numpy Generator and a row count


def _project_out(g: np.ndarray, v: np.ndarray) -> np.ndarray:
    return g - np.outer(g @ v, v)


def _axis_rows(v, lo, hi, gen, m):
    g = gen.standard_normal((m, v.size))
    t = truncated_normal(lo, hi, gen, m)
    return _project_out(g, v) + np.outer(t, v)


def _exact_rows(body: ConvexBody, gen: np.random.Generator, m: int) -> np.ndarray:
    if isinstance(body, Halfspace):
        return _axis_rows(body.direction, body.offset, np.inf, gen, m)
    if isinstance(body, Slab):
        return _axis_rows(body.direction, -body.half_width, body.half_width, gen, m)
    if isinstance(body, Hyperplane):
        return _project_out(gen.standard_normal((m, body.n)), body.direction)
    if isinstance(body, Ball):
        g = gen.standard_normal((m, body.n))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
        r2 = chi2_truncated_sample(body.n, body.radius**2, gen, m)
        return g / norms * np.sqrt(r2)[:, None]
    if isinstance(body, GridUnion):
        # every cell has Gaussian volume 1/M, so pick a kept cell uniformly,
        # then fill each coordinate from the 1-d truncated normal on its side
        cells = np.flatnonzero(body.kept)[gen.integers(0, body.kept_count, m)]
        lo, hi = body.cell_bounds(cells)
        return truncated_normal(lo, hi, gen)
    raise TypeError(f"no exact sampler for {body.variant}")


def _proposal(body: ConvexBody):
    """Proposal body for rejection: the most selective exactly-sampled member, if any."""
    if isinstance(body, Intersection):
        exact = [m for m in body.members if type(m) in (Halfspace, Slab, Ball, Hyperplane)]
        if exact:
            return min(exact, key=lambda m: m.exact_volume())
    return None


def _rejection_rows(body: ConvexBody, gen, m: int, max_attempts: int) -> np.ndarray:
    proposal = _proposal(body)
    out = np.empty((m, body.n))
    filled = 0
    tried = accepted = 0
    dry = 0
    while filled < m:
        rate = accepted / tried if tried else 1.0
        chunk = int(min(max(1.2 * (m - filled) / max(rate, 1e-6) + 64, 256), 65536))
        X = _exact_rows(proposal, gen, chunk) if proposal is not None else gen.standard_normal((chunk, body.n))
        keep = X[body._contains(X)]
        tried += chunk
        accepted += keep.shape[0]
        if keep.shape[0] == 0:
            dry += chunk
            if dry >= max_attempts:
                raise RejectionExhausted(body, dry)
            continue
        dry = 0
        take = min(keep.shape[0], m - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
    return out


def _component_rows(body, strategy, gen, m, max_attempts):
    if strategy == REJECTION:
        return _rejection_rows(body, gen, m, max_attempts)
    return _exact_rows(body, gen, m)


# ---------------------------------------------------------------------------
# public API


def _blocks(T: int, size: int):
    return [(j, min(size, T - j * size)) for j in range((T + size - 1) // size)]


def _run_blocks(fn, rng: RngStream, T: int, workers: int) -> np.ndarray:
    jobs = [(rng.child(j), m) for j, m in _blocks(T, SAMPLER.block_rows)]
    if workers and workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda job: fn(*job), jobs))
    else:
        parts = [fn(*job) for job in jobs]
    return np.vstack(parts)


def sample_with_labels(spec, T: int, rng, workers: int = 1, plan: Optional[SamplerPlan] = None):
    """Like :func:`sample_truncated` but also returns the mixture component of each row."""
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = as_stream(rng)
    plan = plan or SamplerPlan.default(spec)
    spec = plan.spec
    weights = spec.weights
    k = len(weights)

    def block(sub: RngStream, m: int):
        gen = sub.generator()
        labels = gen.choice(k, size=m, p=weights) if k > 1 else np.zeros(m, dtype=np.int64)
        X = np.empty((m, spec.n))
        for c, (body, strat) in enumerate(zip(spec.bodies, plan.strategies)):
            rows = labels == c
            cnt = int(rows.sum())
            if cnt:
                X[rows] = _component_rows(body, strat, gen, cnt, plan.max_attempts)
        return np.column_stack([X, labels])

    out = _run_blocks(block, rng, T, workers)
    return SampleBatch.from_stream(out[:, :-1], rng), out[:, -1].astype(np.int64)


def sample_truncated(spec, T: int, rng, workers: int = 1, plan: Optional[SamplerPlan] = None) -> SampleBatch:
    """T i.i.d. rows from the mixture sum_i w_i N(0, I_n)|K_i.

    Parameters
    ----------
    spec : TruncationSpec or ConvexBody
    T : int
        Number of rows.
    rng : RngStream or int
    workers : int
        Threads used to fill row blocks; the result does not depend on it.
    plan : SamplerPlan, optional
        Override the per-component strategy (e.g. force rejection).

    Raises
    ------
    RejectionExhausted
        When a rejection component sees ``max_attempts`` consecutive failures.
    """
    batch, _ = sample_with_labels(spec, T, rng, workers, plan)
    return batch


def rejection_rate_probe(body: ConvexBody, trials: int, rng) -> float:
    """Fraction of standard Gaussian proposals accepted by ``body``."""
    return mc_volume(body, trials, as_stream(rng))[0]


def sample_ball_hyperplane(R: float, n: int, T: int, rng, direction=None, workers: int = 1) -> SampleBatch:
    """Rows u * sqrt(y): u uniform on the unit sphere of v-perp, y ~ chi^2(n-1) restricted to [0, R].

    If ``direction`` is omitted a Haar-random v is drawn from a dedicated substream.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    if n < 2 or T < 1:
        raise ValueError("need n >= 2 and T >= 1")
    rng = as_stream(rng)
    if direction is None:
        g = rng.child(-1).generator().standard_normal(n)
        v = g / np.linalg.norm(g)
    else:
        v = Hyperplane(direction).direction

    def block(sub: RngStream, m: int):
        gen = sub.generator()
        u = _project_out(gen.standard_normal((m, n)), v)
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        y = chi2_truncated_sample(n - 1, R, gen, m)
        return u * np.sqrt(y)[:, None]

    return SampleBatch.from_stream(_run_blocks(block, rng, T, workers), rng)
