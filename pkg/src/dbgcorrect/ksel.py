"""Pick the largest k whose spectrum valley stays above the unitig threshold."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import get_context
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .kmers import KmerSpectrum, check_k, count_kmers, spectrum
from .seqio import ReadRecord

logger = logging.getLogger(__name__)

__all__ = [
    "KCandidate",
    "KSelectionReport",
    "choose_k",
    "default_k_ladder",
    "first_local_minimum",
    "histogram_valley",
]


def histogram_valley(hist: Union[dict, np.ndarray]) -> Optional[int]:
    """First local minimum of a histogram indexed by abundance (index 0 unused).

    Absent abundances count as zero and runs of equal values are collapsed to
    their first index before looking for a point strictly lower than both of
    its neighbours. Returns ``None`` when no such point exists.
    """
    if isinstance(hist, dict):
        top = max(hist) if hist else 0
        dense = np.zeros(top + 1, dtype=np.int64)
        for a, n in hist.items():
            if a >= 1:
                dense[a] = n
    else:
        dense = np.asarray(hist, dtype=np.int64)
    pos: list[int] = []
    val: list[int] = []
    for a in range(1, dense.shape[0]):
        v = int(dense[a])
        if not val or v != val[-1]:
            pos.append(a)
            val.append(v)
    for i in range(1, len(val) - 1):
        if pos[i] >= 2 and val[i] < val[i - 1] and val[i] < val[i + 1]:
            return pos[i]
    return None


def first_local_minimum(spec: KmerSpectrum) -> Optional[int]:
    if not spec.histogram:
        raise ValueError("empty spectrum")
    return histogram_valley(spec.histogram)


@dataclass(frozen=True)
class KCandidate:
    k: int
    valley: Optional[int]  # abundance position of the first local minimum
    valley_depth: Optional[int]  # histogram value at that position


@dataclass
class KSelectionReport:
    candidates: list[KCandidate]
    chosen_k: int
    fallback: bool = False
    spectra: dict[int, KmerSpectrum] = field(default_factory=dict, repr=False)

    def to_tsv(self) -> str:
        lines = ["k\tvalley\tvalley_depth"]
        for c in self.candidates:
            lines.append(f"{c.k}\t{'NA' if c.valley is None else c.valley}\t"
                         f"{'NA' if c.valley_depth is None else c.valley_depth}")
        lines.append(f"fallback\t{'yes' if self.fallback else 'no'}")
        lines.append(str(self.chosen_k))
        return "\n".join(lines) + "\n"


def default_k_ladder(read_length: int) -> list[int]:
    """21, 31, 41, ... up to min(151, read_length - 1), odd values only."""
    top = min(151, read_length - 1)
    return [k for k in range(21, top + 1, 10) if k % 2 == 1]


def choose_k(reads: Iterable[ReadRecord], k_ladder: Optional[Sequence[int]] = None,
             unitig_threshold: float = 5, threads: int = 1) -> KSelectionReport:
    """Compute each ladder spectrum and keep the largest k whose valley
    abundance is strictly greater than ``unitig_threshold``.

    Falls back to the smallest ladder value (flagged) when none qualifies.
    With ``threads > 1`` the spectra are computed in forked worker processes.
    """
    reads = list(reads)
    if not reads:
        raise ValueError("no reads to select k from")
    longest = max(len(r.sequence) for r in reads)
    if k_ladder is None:
        k_ladder = default_k_ladder(longest)
    ladder = list(k_ladder)
    if not ladder:
        raise ValueError(f"empty k ladder (longest read is {longest} bp)")
    if ladder != sorted(ladder):
        raise ValueError("k ladder must be ascending")
    for k in ladder:
        check_k(k)
    if longest < ladder[0]:
        raise ValueError(f"reads (longest {longest} bp) are shorter than the smallest k {ladder[0]}")

    candidates = []
    spectra = {}
    if threads > 1 and len(ladder) > 1 and os.name == "posix":
        _SHARED["reads"] = reads
        try:
            with ProcessPoolExecutor(max_workers=min(threads, len(ladder)),
                                     mp_context=get_context("fork")) as pool:
                results = list(pool.map(_spectrum_for_shared, ladder))
        finally:
            _SHARED.clear()
    else:
        results = [_spectrum_for(reads, k) for k in ladder]
    for k, spec in zip(ladder, results):
        if spec is None:
            candidates.append(KCandidate(k, None, None))
            continue
        spectra[k] = spec
        valley = first_local_minimum(spec)
        depth = spec.histogram.get(valley, 0) if valley is not None else None
        candidates.append(KCandidate(k, valley, depth))
        logger.info("k=%d valley=%s depth=%s", k, valley, depth)

    good = [c.k for c in candidates if c.valley is not None and c.valley > unitig_threshold]
    if good:
        return KSelectionReport(candidates, max(good), False, spectra)
    logger.warning("no k has a spectrum valley above %d; falling back to k=%d",
                   unitig_threshold, ladder[0])
    return KSelectionReport(candidates, ladder[0], True, spectra)


_SHARED: dict = {}


def _spectrum_for(reads, k: int) -> Optional[KmerSpectrum]:
    table = count_kmers(reads, k)
    return spectrum(table) if len(table) else None


def _spectrum_for_shared(k: int) -> Optional[KmerSpectrum]:
    return _spectrum_for(_SHARED["reads"], k)
