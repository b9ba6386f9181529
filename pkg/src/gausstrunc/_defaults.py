"""Centralized tolerances and operational constants.

Everything a test or a report needs to quote lives here so that there is a
single place to audit the numbers the algorithms run with.
"""

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class Tolerances:
    symmetry_rel: float = 1e-12
    pivot_rel: float = 1e-12
    unit_norm: float = 1e-12
    plane: float = 1e-9
    chol_reconstruct: float = 1e-10


@dataclass(frozen=True)
class TesterDefaults:
    c_sym: float = 1.6
    C_sample: float = 8.0
    L_threshold: float = 0.05
    N_threshold_c: float = 0.3
    mean_estimator_delta: float = 0.01
    weiszfeld_steps: int = 200
    weiszfeld_tol: float = 1e-10


@dataclass(frozen=True)
class SamplerDefaults:
    max_attempts: int = 1_000_000
    block_rows: int = 8192
    bisection_iters: int = 60
    bisection_tol: float = 1e-13


@dataclass(frozen=True)
class LabDefaults:
    mixture_C: float = 10.0
    quad_epsrel: float = 1e-10
    astar_outer_factor: float = 50.0
    typicality_C1: float = 3.0


TOL = Tolerances()
TESTER = TesterDefaults()
SAMPLER = SamplerDefaults()
LAB = LabDefaults()

DEFAULTS_VERSION = "1"


def defaults_record() -> dict:
    """Return every default as a plain nested dict (what ``--print-defaults`` shows)."""
    return {
        "version": DEFAULTS_VERSION,
        "tolerances": asdict(TOL),
        "tester": asdict(TESTER),
        "sampler": asdict(SAMPLER),
        "lab": asdict(LAB),
    }
