"""Sampling, testing and lower-bound experiments for convex truncations of N(0, I_n)."""

from ._defaults import DEFAULTS_VERSION, LAB, SAMPLER, TESTER, TOL, defaults_record
from .bodies import (
    Ball,
    ConvexBody,
    GridUnion,
    Halfspace,
    Hyperplane,
    Intersection,
    Slab,
    TruncationSpec,
    axis,
    contains,
    dump_spec,
    exact_volume,
    grid_union_random,
    load_spec,
    matched_body,
    mc_volume,
)
from .core import (
    PsdMatrix,
    RngStream,
    SampleBatch,
    chol_logdet,
    gaussian_batch,
    map_trials,
    truncated_normal_1d,
    unit_sphere,
)
from .errors import (
    DimensionMismatch,
    EmptyInterval,
    GaussTruncError,
    NotPositiveDefinite,
    RejectionExhausted,
    RootNotBracketed,
    SpecParseError,
    TooFewSamples,
)
from .samplers import SamplerPlan, rejection_rate_probe, sample_ball_hyperplane, sample_truncated

__version__ = "0.1.0"

__all__ = [
    "axis",
    "Ball",
    "chol_logdet",
    "contains",
    "ConvexBody",
    "defaults_record",
    "DEFAULTS_VERSION",
    "DimensionMismatch",
    "dump_spec",
    "EmptyInterval",
    "exact_volume",
    "gaussian_batch",
    "GaussTruncError",
    "grid_union_random",
    "GridUnion",
    "Halfspace",
    "Hyperplane",
    "Intersection",
    "LAB",
    "load_spec",
    "map_trials",
    "matched_body",
    "mc_volume",
    "NotPositiveDefinite",
    "PsdMatrix",
    "rejection_rate_probe",
    "RejectionExhausted",
    "RngStream",
    "RootNotBracketed",
    "sample_ball_hyperplane",
    "sample_truncated",
    "SampleBatch",
    "SAMPLER",
    "SamplerPlan",
    "Slab",
    "SpecParseError",
    "TESTER",
    "TOL",
    "TooFewSamples",
    "truncated_normal_1d",
    "TruncationSpec",
    "unit_sphere",
]
