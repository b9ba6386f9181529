"""Truncation sets: halfspaces, slabs, balls, hyperplanes, intersections and grid unions.

Bodies are immutable values with a vectorized membership predicate and, where
one exists, a closed-form Gaussian volume.  They round-trip through a small
JSON format::

    {"variant": "slab", "n": 10, "direction": [1.0, 0.0, ...], "half_width": 0.6745}

A :class:`TruncationSpec` is a weighted list of bodies and describes
N(0, I_n) conditioned on a single body (one component) or a mixture of such
conditionals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy import special, stats

from ._defaults import TOL
from .core import RngStream, as_stream
from .errors import DimensionMismatch, SpecParseError


def _as_direction(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    if v.size < 1:
        raise ValueError("direction must be non-empty")
    if abs(np.linalg.norm(v) - 1.0) > TOL.unit_norm:
        raise ValueError(f"direction must be unit norm (|v| = {np.linalg.norm(v)!r})")
    v.setflags(write=False)
    return v


def axis(n: int, i: int = 0, sign: float = 1.0) -> np.ndarray:
    """Signed standard basis vector ``sign * e_i`` in R^n."""
    e = np.zeros(n)
    e[i] = math.copysign(1.0, sign)
    return e


def _points(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n:
        raise DimensionMismatch(f"point dimension {x.shape[-1]} != body dimension {n}")
    return x


class ConvexBody:
    """Common interface for every truncation set."""

    n: int
    symmetric: bool = False
    variant: str = ""

    def contains(self, x) -> Union[bool, np.ndarray]:
        x = _points(x, self.n)
        res = self._contains(np.atleast_2d(x))
        return bool(res[0]) if x.ndim == 1 else res

    def _contains(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def exact_volume(self) -> Optional[float]:
        return None

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Halfspace(ConvexBody):
    """{x : <v, x> >= b}."""

    direction: np.ndarray
    offset: float = 0.0
    variant = "halfspace"

    def __post_init__(self):
        object.__setattr__(self, "direction", _as_direction(self.direction))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n(self) -> int:
        return self.direction.size

    def _contains(self, X):
        return X @ self.direction >= self.offset

    def exact_volume(self):
        return float(special.ndtr(-self.offset))

    def to_dict(self):
        return {"variant": self.variant, "n": self.n, "direction": self.direction.tolist(),
                "offset": self.offset}


@dataclass(frozen=True, eq=False)
class Slab(ConvexBody):
    """{x : |<v, x>| <= r}."""

    direction: np.ndarray
    half_width: float
    variant = "slab"
    symmetric = True

    def __post_init__(self):
        object.__setattr__(self, "direction", _as_direction(self.direction))
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        object.__setattr__(self, "half_width", float(self.half_width))

    @property
    def n(self) -> int:
        return self.direction.size

    def _contains(self, X):
        return np.abs(X @ self.direction) <= self.half_width

    def exact_volume(self):
        return float(2.0 * special.ndtr(self.half_width) - 1.0)

    def to_dict(self):
        return {"variant": self.variant, "n": self.n, "direction": self.direction.tolist(),
                "half_width": self.half_width}


@dataclass(frozen=True, eq=False)
class Ball(ConvexBody):
    """Origin-centred Euclidean ball of radius r in R^n."""

    n: int
    radius: float
    variant = "ball"
    symmetric = True

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("n must be >= 1")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "radius", float(self.radius))

    def _contains(self, X):
        return np.einsum("ij,ij->i", X, X) <= self.radius**2

    def exact_volume(self):
        return float(special.gammainc(self.n / 2.0, self.radius**2 / 2.0))

    def to_dict(self):
        return {"variant": self.variant, "n": self.n, "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Hyperplane(ConvexBody):
    """Origin-centred hyperplane v-perp; measure zero, obtained as a limit of thin slabs."""

    direction: np.ndarray
    variant = "hyperplane"
    symmetric = True

    def __post_init__(self):
        object.__setattr__(self, "direction", _as_direction(self.direction))

    @property
    def n(self) -> int:
        return self.direction.size

    def _contains(self, X):
        return np.abs(X @ self.direction) <= TOL.plane

    def exact_volume(self):
        return 0.0

    def to_dict(self):
        return {"variant": self.variant, "n": self.n, "direction": self.direction.tolist()}


@dataclass(frozen=True, eq=False)
class Intersection(ConvexBody):
    members: tuple
    variant = "intersection"

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("Intersection needs at least one member")
        if any(isinstance(m, GridUnion) for m in members):
            raise ValueError("GridUnion is not convex and cannot be intersected")
        dims = {m.n for m in members}
        if len(dims) != 1:
            raise DimensionMismatch(f"members disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "members", members)

    @property
    def n(self) -> int:
        return self.members[0].n

    @property
    def symmetric(self) -> bool:
        return all(m.symmetric for m in self.members)

    def _contains(self, X):
        out = np.ones(X.shape[0], dtype=bool)
        for m in self.members:
            out &= m._contains(X)
        return out

    def to_dict(self):
        return {"variant": self.variant, "n": self.n,
                "members": [m.to_dict() for m in self.members]}


@dataclass(frozen=True, eq=False)
class GridUnion(ConvexBody):
    """Union of kept cells of a Gaussian-quantile grid with M = k**n equal-volume cells.

    Cell ``(i_1, ..., i_n)`` is the box prod_j [Phi^{-1}(i_j/k), Phi^{-1}((i_j+1)/k)),
    so every cell has Gaussian volume exactly 1/M.
    """

    n: int
    cells_per_axis: int
    kept: np.ndarray = field(repr=False)
    variant = "grid_union"

    def __post_init__(self):
        n, k = int(self.n), int(self.cells_per_axis)
        if n < 1 or k < 1:
            raise ValueError("n and cells_per_axis must be positive")
        mask = np.asarray(self.kept)
        if mask.dtype != bool:
            idx = mask.astype(np.int64)
            mask = np.zeros(k**n, dtype=bool)
            mask[idx] = True
        if mask.shape != (k**n,):
            raise ValueError("kept mask must have one entry per cell")
        mask.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "cells_per_axis", k)
        object.__setattr__(self, "kept", mask)

    @property
    def M(self) -> int:
        return self.cells_per_axis**self.n

    @property
    def kept_count(self) -> int:
        return int(self.kept.sum())

    def cell_index(self, x) -> np.ndarray:
        """Flat cell index of each point (every point lands in exactly one cell)."""
        X = np.atleast_2d(_points(x, self.n))
        k = self.cells_per_axis
        sub = np.minimum(np.floor(special.ndtr(X) * k).astype(np.int64), k - 1)
        return np.ravel_multi_index(sub.T, (k,) * self.n)

    def cell_bounds(self, index) -> tuple[np.ndarray, np.ndarray]:
        """Per-coordinate (lo, hi) bounds of the given flat cell indices."""
        k = self.cells_per_axis
        sub = np.array(np.unravel_index(np.asarray(index), (k,) * self.n)).T
        return special.ndtri(sub / k), special.ndtri((sub + 1) / k)

    def _contains(self, X):
        return self.kept[self.cell_index(X)]

    def exact_volume(self):
        return self.kept_count / self.M

    def to_dict(self):
        return {"variant": self.variant, "n": self.n, "cells_per_axis": self.cells_per_axis,
                "M": self.M, "kept": np.flatnonzero(self.kept).tolist()}


# ---------------------------------------------------------------------------
# module-level operations


def contains(body: ConvexBody, x):
    return body.contains(x)


def exact_volume(body: ConvexBody) -> Optional[float]:
    return body.exact_volume()


def mc_volume(body: ConvexBody, trials: int, rng: RngStream, chunk: int = 65536) -> tuple[float, float]:
    """Monte Carlo Gaussian volume with its binomial standard error."""
    if trials < 100:
        raise ValueError("mc_volume needs at least 100 trials")
    rng = as_stream(rng)
    hits = 0
    for j, start in enumerate(range(0, trials, chunk)):
        m = min(chunk, trials - start)
        X = rng.child(j).generator().standard_normal((m, body.n))
        hits += int(np.count_nonzero(body._contains(X)))
    p = hits / trials
    return p, math.sqrt(p * (1.0 - p) / trials)


def grid_union_random(n: int, M: int, keep_fraction: float, rng: RngStream) -> GridUnion:
    """GridUnion keeping a uniformly random set of floor(keep_fraction * M) cells."""
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError("keep_fraction must lie in (0, 1]")
    if M * keep_fraction < 1.0:
        raise ValueError("M must be at least 1 / keep_fraction")
    k = int(round(M ** (1.0 / n)))
    if k**n != M:
        raise ValueError(f"M={M} is not a perfect {n}-th power")
    keep = int(math.floor(keep_fraction * M + 1e-9))
    mask = np.zeros(M, dtype=bool)
    mask[as_stream(rng).generator().permutation(M)[:keep]] = True
    return GridUnion(n, k, mask)


def matched_body(kind: str, n: int, eps: float, direction=None) -> ConvexBody:
    """Body of the given family whose Gaussian volume is exactly ``1 - eps``.

    ``hyperplane`` ignores ``eps`` (its volume is always 0).
    """
    v = axis(n) if direction is None else direction
    if kind == "hyperplane":
        return Hyperplane(v)
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if kind == "slab":
        return Slab(v, special.ndtri(1.0 - eps / 2.0))
    if kind == "halfspace":
        return Halfspace(v, special.ndtri(eps))
    if kind == "ball":
        return Ball(n, math.sqrt(stats.chi2.ppf(1.0 - eps, n)))
    raise ValueError(f"unknown body family {kind!r}")


@dataclass(frozen=True)
class TruncationSpec:
    """Weighted mixture of truncation bodies; a single weight-1 body is a plain truncation."""

    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), b) for w, b in self.components)
        if not comps:
            raise ValueError("TruncationSpec needs at least one component")
        if any(w < 0 for w, _ in comps):
            raise ValueError("weights must be non-negative")
        if abs(sum(w for w, _ in comps) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        if len({b.n for _, b in comps}) != 1:
            raise DimensionMismatch("all bodies must share one dimension")
        object.__setattr__(self, "components", comps)

    @classmethod
    def single(cls, body: ConvexBody) -> "TruncationSpec":
        return cls(((1.0, body),))

    @classmethod
    def mixture(cls, weights: Sequence[float], bodies: Sequence[ConvexBody]) -> "TruncationSpec":
        return cls(tuple(zip(weights, bodies)))

    @property
    def n(self) -> int:
        return self.components[0][1].n

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.components])

    @property
    def bodies(self) -> list:
        return [b for _, b in self.components]

    @property
    def symmetric(self) -> bool:
        return all(b.symmetric for b in self.bodies)

    def tv_from_gaussian(self) -> Optional[float]:
        """d_TV to N(0, I_n) for a single closed-form body (1 - vol)."""
        if len(self.components) == 1:
            vol = self.bodies[0].exact_volume()
            return None if vol is None else 1.0 - vol
        return None

    def to_dict(self) -> dict:
        return {"components": [{"weight": w, "body": b.to_dict()} for w, b in self.components]}


def as_spec(obj) -> TruncationSpec:
    if isinstance(obj, TruncationSpec):
        return obj
    if isinstance(obj, ConvexBody):
        return TruncationSpec.single(obj)
    raise TypeError(f"expected ConvexBody or TruncationSpec, got {type(obj).__name__}")


# ---------------------------------------------------------------------------
# JSON


def body_from_dict(d: dict) -> ConvexBody:
    try:
        variant = d["variant"]
        n = int(d["n"])
        if variant == "halfspace":
            body = Halfspace(d["direction"], d.get("offset", 0.0))
        elif variant == "slab":
            body = Slab(d["direction"], d["half_width"])
        elif variant == "ball":
            body = Ball(n, d["radius"])
        elif variant == "hyperplane":
            body = Hyperplane(d["direction"])
        elif variant == "intersection":
            body = Intersection(tuple(body_from_dict(m) for m in d["members"]))
        elif variant == "grid_union":
            body = GridUnion(n, d["cells_per_axis"], np.asarray(d["kept"], dtype=np.int64))
        else:
            raise SpecParseError(f"unknown body variant {variant!r}")
    except SpecParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecParseError(f"invalid body description: {exc}") from exc
    if body.n != n:
        raise SpecParseError(f"declared n={n} but body has dimension {body.n}")
    return body


def spec_from_dict(d: dict) -> TruncationSpec:
    """Accept either a bare body description or ``{"components": [...]}``."""
    if "components" in d:
        try:
            comps = [(c["weight"], body_from_dict(c["body"])) for c in d["components"]]
            return TruncationSpec(tuple(comps))
        except SpecParseError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecParseError(f"invalid truncation spec: {exc}") from exc
    return TruncationSpec.single(body_from_dict(d))


def load_spec(path) -> TruncationSpec:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecParseError(f"cannot read spec {path}: {exc}") from exc
    return spec_from_dict(d)


def dump_spec(spec, path) -> None:
    spec = as_spec(spec)
    d = spec.to_dict() if len(spec.components) > 1 else spec.bodies[0].to_dict()
    Path(path).write_text(json.dumps(d, indent=2))
