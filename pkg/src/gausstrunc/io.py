"""SampleBatch export: commented-header CSV and a fixed-header little-endian binary format."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .core import SampleBatch

_MAGIC = 0x4754524E43424154  # ascii "GTRNCBAT"
_VERSION = 1
_HEADER = np.dtype([(name, "<u8") for name in
                    ("magic", "version", "master_seed", "stream_index", "n", "T", "itemsize", "order")])
_CSV_HEAD = re.compile(r"#\s*seed=(\S+),\s*stream=(\S+),\s*n=(\d+),\s*T=(\d+)")


def write_csv(batch: SampleBatch, path) -> None:
    """Header ``# seed=..., stream=..., n=..., T=...`` then one comma-separated row per sample."""
    head = f"seed={batch.master_seed}, stream={batch.stream_index}, n={batch.n}, T={batch.T}"
    np.savetxt(path, batch.data, delimiter=",", fmt="%.17g", header=head, comments="# ")


def read_csv(path) -> SampleBatch:
    with open(path) as fh:
        first = fh.readline()
    m = _CSV_HEAD.match(first)
    if not m:
        raise ValueError(f"{path}: missing sample header")
    seed, stream, n, T = m.groups()
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if data.shape != (int(T), int(n)):
        raise ValueError(f"{path}: header says {T}x{n}, body is {data.shape[0]}x{data.shape[1]}")
    as_int = lambda s: None if s == "None" else int(s)  # noqa: E731
    return SampleBatch(data, as_int(seed), as_int(stream))


def write_binary(batch: SampleBatch, path) -> None:
    """Eight little-endian uint64 header fields followed by row-major float64 data."""
    head = np.zeros(1, dtype=_HEADER)
    head[0] = (_MAGIC, _VERSION, batch.master_seed or 0, batch.stream_index or 0,
               batch.n, batch.T, 8, 0)
    with open(path, "wb") as fh:
        fh.write(head.tobytes())
        fh.write(np.ascontiguousarray(batch.data, dtype="<f8").tobytes())


def read_binary(path) -> SampleBatch:
    raw = Path(path).read_bytes()
    head = np.frombuffer(raw[: _HEADER.itemsize], dtype=_HEADER)[0]
    if int(head["magic"]) != _MAGIC:
        raise ValueError(f"{path}: not a sample batch file")
    n, T = int(head["n"]), int(head["T"])
    data = np.frombuffer(raw[_HEADER.itemsize :], dtype="<f8").reshape(T, n)
    return SampleBatch(data.copy(), int(head["master_seed"]), int(head["stream_index"]))
