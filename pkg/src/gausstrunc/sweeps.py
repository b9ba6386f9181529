"""One-parameter power sweeps.

Each grid point gets its own substream ``rng.child(i)``, so adding or removing
points never changes the results of the others.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .bodies import as_spec, matched_body
from .core import as_stream
from .testers import TestConfig, detection_rate

SWEEP_PARAMS = ("eps", "n", "T")


@dataclass(frozen=True)
class SweepRow:
    parameter: float
    estimate: float
    stderr: float


def _row(x, hits) -> SweepRow:
    rate = float(hits.mean())
    return SweepRow(x, rate, math.sqrt(rate * (1.0 - rate) / hits.size))


def power_curve(spec, algorithm: str, T_grid: Sequence[int], trials: int, rng,
                eps: Optional[float] = None, workers: int = 1) -> list[SweepRow]:
    """Detection rate against a fixed truncation for each sample size in ``T_grid``."""
    if not T_grid:
        raise ValueError("empty grid")
    spec = as_spec(spec)
    rng = as_stream(rng)
    rows = []
    for i, T in enumerate(T_grid):
        config = TestConfig(spec.n, eps, int(T), algorithm)
        rows.append(_row(int(T), detection_rate(spec, config, trials, rng.child(i), workers)[1]))
    return rows


def sweep(param: str, grid: Sequence[float], *, body: str, algorithm: str, trials: int, rng,
          n: Optional[int] = None, eps: Optional[float] = None, T: Optional[int] = None,
          workers: int = 1) -> list[SweepRow]:
    """Vary one of ``eps``, ``n`` or ``T`` over ``grid`` against a matched-volume body.

    ``body`` names a family accepted by :func:`matched_body`.  When sweeping
    ``eps`` the body volume is 1 - eps while the test keeps a fixed threshold,
    derived from ``T`` (default: the sample-size rule at the smallest eps).
    """
    if param not in SWEEP_PARAMS:
        raise ValueError(f"param must be one of {SWEEP_PARAMS}")
    if not grid:
        raise ValueError("empty grid")
    rng = as_stream(rng)
    rows = []
    if param == "eps":
        if n is None:
            raise ValueError("eps sweep needs n")
        if T is None:
            T = TestConfig(n, min(grid), None, algorithm).T
        config = TestConfig(n, None, T, algorithm)
        for i, e in enumerate(grid):
            hits = detection_rate(matched_body(body, n, e), config, trials, rng.child(i), workers)[1]
            rows.append(_row(float(e), hits))
    elif param == "n":
        if T is None and eps is None:
            raise ValueError("n sweep needs T or eps")
        for i, d in enumerate(grid):
            d = int(d)
            config = TestConfig(d, None if T else eps, T, algorithm)
            target = matched_body(body, d, eps if eps is not None else 0.5)
            rows.append(_row(d, detection_rate(target, config, trials, rng.child(i), workers)[1]))
    else:
        if n is None or eps is None:
            raise ValueError("T sweep needs n and eps")
        rows = power_curve(matched_body(body, n, eps), algorithm, [int(t) for t in grid], trials, rng,
                           eps=None, workers=workers)
    return rows
