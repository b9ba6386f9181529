"""Command-line entry point.

Single runs print a JSON run report; sweeps print CSV with columns
``parameter,estimate,stderr``.  The verdict of a test never affects the exit
status: 0 means the run completed, 1 a usage or input error, 2 a sampler
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import secrets
import sys
import time
from dataclasses import asdict, is_dataclass
from importlib import resources

import jsonschema
import numpy as np

from . import __version__, lblab, sweeps
from ._defaults import DEFAULTS_VERSION, defaults_record
from .bodies import spec_from_dict
from .core import RngStream
from .errors import GaussTruncError, RejectionExhausted, SpecParseError
from .influence import mills_ratio, truncated_moments
from .io import write_binary, write_csv
from .samplers import sample_truncated
from .testers import ALGORITHMS, TestConfig, calibrate_threshold, run_distinguisher


class ConfigError(ValueError):
    pass


def load_schema(name: str) -> dict:
    return json.loads(resources.files("gausstrunc").joinpath("schemas", name).read_text())


def read_spec(path):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecParseError(f"cannot read spec {path}: {exc}") from exc
    try:
        jsonschema.validate(d, load_schema("spec.schema.json"))
    except jsonschema.ValidationError as exc:
        raise SpecParseError(f"{path}: {exc.message}") from exc
    return spec_from_dict(d)


def _jsonable(obj):
    if is_dataclass(obj):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _floats(text: str) -> list[float]:
    vals = [float(t) for t in text.split(",") if t.strip()]
    if not vals:
        raise ConfigError("empty grid")
    return vals


# ---------------------------------------------------------------------------
# command handlers: each returns (config echo, payload) or a CSV string


def _spec_n(spec, n):
    if n is not None and n != spec.n:
        raise ConfigError(f"--n {n} does not match spec dimension {spec.n}")
    return spec.n


def cmd_sample(a, rng):
    spec = read_spec(a.spec)
    batch = sample_truncated(spec, a.T, rng, workers=a.workers)
    if a.format == "binary":
        if not a.out:
            raise ConfigError("binary output needs --out")
        write_binary(batch, a.out)
        return None
    buf = io.StringIO()
    write_csv(batch, buf)
    return buf.getvalue()


def cmd_test(a, rng):
    spec = read_spec(a.spec)
    n = _spec_n(spec, a.n)
    config = TestConfig(n, a.eps, a.T, a.alg)
    batch = sample_truncated(spec, config.T, rng, workers=a.workers)
    return config.to_dict(), run_distinguisher(batch, config).to_dict()


def cmd_calibrate(a, rng):
    cal = calibrate_threshold(a.alg, a.n, a.eps, a.T, a.alpha, a.trials, rng, a.workers)
    return {"algorithm": a.alg, "n": a.n, "eps": a.eps, "T": a.T, "alpha": a.alpha, "trials": a.trials}, cal


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["parameter", "estimate", "stderr"])
    for r in rows:
        w.writerow([repr(r.parameter), repr(r.estimate), repr(r.stderr)])
    return buf.getvalue()


def cmd_power(a, rng):
    spec = read_spec(a.spec)
    grid = [int(t) for t in _floats(a.T_grid)]
    return _csv(sweeps.power_curve(spec, a.alg, grid, a.trials, rng, eps=a.eps, workers=a.workers))


def cmd_sweep(a, rng):
    grids = {k: getattr(a, f"{k}_grid") for k in ("eps", "n", "T")}
    chosen = [k for k, v in grids.items() if v is not None]
    if len(chosen) != 1:
        raise ConfigError("exactly one of --eps-grid, --n-grid, --T-grid is required")
    param = chosen[0]
    rows = sweeps.sweep(param, _floats(grids[param]), body=a.body, algorithm=a.alg, trials=a.trials,
                        rng=rng, n=a.n, eps=a.eps, T=a.T, workers=a.workers)
    return _csv(rows)


def cmd_moments(a, rng):
    m = truncated_moments(a.b)
    return {"b": a.b}, {**asdict(m), "mills_ratio": mills_ratio(a.b)}


def cmd_lb_wishart_tv(a, rng):
    tv, se = lblab.estimate_tv_wishart(a.p, a.n, a.draws, rng, a.workers)
    return {"p": a.p, "n": a.n, "draws": a.draws}, {"tv_estimate": tv, "stderr": se}


def cmd_lb_clt(a, rng):
    return {"p": a.p, "n": a.n, "trials": a.trials}, lblab.logdet_clt_check(a.p, a.n, a.trials, rng, a.workers)


def cmd_lb_mixture(a, rng):
    params = lblab.MixtureLbParams(a.n, a.delta)
    w = lblab.mixture_lb_weights(params)
    check = lblab.mixture_lb_density_check(params, weights=w)
    payload = {
        "delta": params.delta,
        "delta_prime": params.delta_prime,
        "a_star": w.a_star,
        "lambda_mass": w.mass(),
        "max_rel_error": check.max_rel_error,
        "tail_bound": check.tail_bound,
        "hellinger_sq": lblab.hellinger_sq_gaussians(a.n, params.delta),
    }
    return {"n": a.n, "delta": a.delta}, payload


def cmd_lb_grid(a, rng):
    res = lblab.grid_birthday_demo(a.n, a.M, a.eps, a.N, a.trials, rng, a.workers)
    return {"n": a.n, "M": a.M, "eps": a.eps, "N": a.N, "trials": a.trials}, res


def cmd_lb_power(a, rng):
    spec = read_spec(a.spec)
    rate = lblab.empirical_power_at_budget(spec, a.alg, a.T, a.trials, rng, eps=a.eps, workers=a.workers)
    se = math.sqrt(rate * (1 - rate) / a.trials)
    return {"spec": a.spec, "alg": a.alg, "T": a.T, "trials": a.trials, "eps": a.eps}, \
        {"detection_rate": rate, "stderr": se}


# ---------------------------------------------------------------------------
# parser


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, help="64-bit master seed (random if omitted)")
    common.add_argument("--workers", type=int, default=1, help="threads; never changes results")
    common.add_argument("--out", help="write output here instead of stdout")

    p = argparse.ArgumentParser(prog="gausstrunc", description=__doc__.split("\n")[0])
    p.add_argument("--print-defaults", action="store_true", help="print the constants record and exit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command")

    s = sub.add_parser("sample", parents=[common], help="draw a truncated sample")
    s.add_argument("--spec", required=True)
    s.add_argument("--T", type=int, required=True)
    s.add_argument("--format", choices=("csv", "binary"), default="csv")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("test", parents=[common], help="run a distinguisher on a fresh sample")
    s.add_argument("--alg", choices=ALGORITHMS, required=True)
    s.add_argument("--spec", required=True)
    s.add_argument("--n", type=int)
    s.add_argument("--eps", type=float)
    s.add_argument("--T", type=int)
    s.set_defaults(func=cmd_test)

    s = sub.add_parser("calibrate", parents=[common], help="calibrate a threshold constant under the null")
    s.add_argument("--alg", choices=ALGORITHMS, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--eps", type=float)
    s.add_argument("--T", type=int)
    s.add_argument("--alpha", type=float, default=0.1)
    s.add_argument("--trials", type=int, default=1000)
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("power", parents=[common], help="power curve over a T grid (CSV)")
    s.add_argument("--alg", choices=ALGORITHMS, required=True)
    s.add_argument("--spec", required=True)
    s.add_argument("--T-grid", dest="T_grid", required=True)
    s.add_argument("--eps", type=float)
    s.add_argument("--trials", type=int, default=200)
    s.set_defaults(func=cmd_power)

    s = sub.add_parser("sweep", parents=[common], help="vary one parameter against matched bodies (CSV)")
    s.add_argument("--alg", choices=ALGORITHMS, required=True)
    s.add_argument("--body", choices=("slab", "ball", "halfspace", "hyperplane"), required=True)
    s.add_argument("--eps-grid", dest="eps_grid")
    s.add_argument("--n-grid", dest="n_grid")
    s.add_argument("--T-grid", dest="T_grid")
    s.add_argument("--n", type=int)
    s.add_argument("--eps", type=float)
    s.add_argument("--T", type=int)
    s.add_argument("--trials", type=int, default=200)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("moments", parents=[common], help="truncated normal moments on [b, inf)")
    s.add_argument("--b", type=float, required=True)
    s.set_defaults(func=cmd_moments)

    lb = sub.add_parser("lb", help="lower-bound experiments").add_subparsers(dest="lb_command")
    s = lb.add_parser("wishart-tv", parents=[common])
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--draws", type=int, default=10000)
    s.set_defaults(func=cmd_lb_wishart_tv)

    s = lb.add_parser("clt", parents=[common])
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--trials", type=int, default=2000)
    s.set_defaults(func=cmd_lb_clt)

    s = lb.add_parser("mixture", parents=[common])
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--delta", type=float)
    s.set_defaults(func=cmd_lb_mixture)

    s = lb.add_parser("grid", parents=[common])
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--trials", type=int, default=1000)
    s.set_defaults(func=cmd_lb_grid)

    s = lb.add_parser("power", parents=[common])
    s.add_argument("--spec", required=True)
    s.add_argument("--alg", choices=ALGORITHMS, required=True)
    s.add_argument("--T", type=int, required=True)
    s.add_argument("--eps", type=float)
    s.add_argument("--trials", type=int, default=500)
    s.set_defaults(func=cmd_lb_power)
    return p


def run(argv=None) -> tuple[str, str | None]:
    """Parse ``argv`` and execute; returns the output text and the ``--out`` path."""
    parser = build_parser()
    a = parser.parse_args(argv)
    if a.print_defaults:
        return json.dumps(defaults_record(), indent=2) + "\n", None
    if not getattr(a, "func", None):
        parser.print_help(sys.stderr)
        raise ConfigError("no command given")
    seed = a.seed if a.seed is not None else secrets.randbits(63)
    rng = RngStream(seed, 0)
    command = a.command + (f" {a.lb_command}" if a.command == "lb" else "")
    t0 = time.perf_counter()
    result = a.func(a, rng)
    wall = time.perf_counter() - t0
    if result is None:
        return "", None
    if isinstance(result, str):
        return f"# command={command}, seed={seed}, version={__version__}\n" + result, a.out
    config, payload = result
    report = {
        "command": command,
        "config": _jsonable({**config, "seed": seed}),
        "payload": _jsonable(payload),
        "substream_base": rng.to_dict(),
        "version": __version__,
        "defaults_version": DEFAULTS_VERSION,
        "wall_time": wall,
    }
    jsonschema.validate(report, load_schema("run_report.schema.json"))
    return json.dumps(report, indent=2, sort_keys=True) + "\n", a.out


def main(argv=None) -> int:
    try:
        text, out = run(argv)
    except RejectionExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GaussTruncError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    elif text:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
