"""Ground-truthed short-read simulation with uniform substitution errors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .seqio import ReadRecord

__all__ = ["SimulationSpec", "random_genome", "simulate_reads", "parse_read_id"]

_LETTERS = np.frombuffer(b"ACGT", dtype=np.uint8)
_CODE = np.full(256, 255, dtype=np.uint8)
for _i, _b in enumerate(b"ACGT"):
    _CODE[_b] = _i


def random_genome(length: int, rng_seed: int = 0,
                  repeat_spec: Optional[tuple[int, int]] = None) -> str:
    """Uniform i.i.d. genome; optionally plant ``count`` exact copies of one
    random ``repeat_length`` substring at non-overlapping random loci."""
    if length < 1:
        raise ValueError("genome length must be >= 1")
    rng = np.random.default_rng(rng_seed)
    codes = rng.integers(0, 4, size=length, dtype=np.uint8)
    if repeat_spec is not None:
        count, rlen = repeat_spec
        if count < 1 or rlen < 1:
            raise ValueError("repeat count and length must be >= 1")
        slack = length - count * rlen
        if slack < 0:
            raise ValueError(f"cannot place {count} non-overlapping repeats of {rlen} bp "
                             f"in {length} bp")
        unit = rng.integers(0, 4, size=rlen, dtype=np.uint8)
        # sorted offsets into the slack, shifted by the copies already laid down
        offsets = np.sort(rng.integers(0, slack + 1, size=count))
        for i, off in enumerate(offsets):
            start = int(off) + i * rlen
            codes[start:start + rlen] = unit
    return _LETTERS[codes].tobytes().decode("ascii")


@dataclass(frozen=True)
class SimulationSpec:
    genome: str
    coverage: float
    read_length: int
    error_rate: float
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 <= self.error_rate < 1:
            raise ValueError("error rate must be in [0, 1)")
        if self.coverage <= 0:
            raise ValueError("coverage must be > 0")
        if self.read_length < 1:
            raise ValueError("read length must be >= 1")
        if self.read_length > len(self.genome):
            raise ValueError(f"read length {self.read_length} exceeds genome length "
                             f"{len(self.genome)}")

    @property
    def n_reads(self) -> int:
        return math.ceil(self.coverage * len(self.genome) / self.read_length)


def simulate_reads(spec: SimulationSpec) -> tuple[list[ReadRecord], list[ReadRecord]]:
    """Return (reads with errors, error-free truth), paired by position.

    Read ids look like ``r{index}_{start}_{strand}`` where ``start`` is the
    0-based forward-strand start and ``strand`` is ``+`` or ``-``.
    """
    g = np.frombuffer(spec.genome.upper().encode("ascii"), dtype=np.uint8)
    gcodes = _CODE[g]
    if np.any(gcodes == 255):
        raise ValueError("genome must contain only A, C, G, T")
    rng = np.random.default_rng(spec.rng_seed)
    n, L = spec.n_reads, spec.read_length
    starts = rng.integers(0, len(g) - L + 1, size=n)
    reverse = rng.random(n) < 0.5
    idx = starts[:, None] + np.arange(L)[None, :]
    truth = gcodes[idx]
    truth[reverse] = 3 - truth[reverse][:, ::-1]
    hit = rng.random((n, L)) < spec.error_rate
    shift = rng.integers(1, 4, size=(n, L), dtype=np.uint8)
    reads = np.where(hit, (truth + shift) % 4, truth).astype(np.uint8)
    truth_txt = _LETTERS[truth].tobytes().decode("ascii")
    read_txt = _LETTERS[reads].tobytes().decode("ascii")
    out_reads, out_truth = [], []
    for i in range(n):
        rid = f"r{i}_{int(starts[i])}_{'-' if reverse[i] else '+'}"
        out_truth.append(ReadRecord(rid, truth_txt[i * L:(i + 1) * L]))
        out_reads.append(ReadRecord(rid, read_txt[i * L:(i + 1) * L]))
    return out_reads, out_truth


def parse_read_id(read_id: str) -> tuple[int, int, str]:
    """(index, start, strand) from a simulated read id."""
    head = read_id.split()[0]
    idx, start, strand = head.split("_")
    return int(idx[1:]), int(start), strand
