"""Per-base correction metrics against simulated ground truth, and the
graph-construction strategy comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .cdbg import build_graph
from .clean import CleaningConfig, clean_graph
from .kmers import count_kmers, filter_solid, iter_kmers
from .seqio import ReadRecord

__all__ = [
    "EvaluationError",
    "CorrectionMetrics",
    "STRATEGIES",
    "StrategyResult",
    "classify_base",
    "evaluate",
    "evaluate_graph_strategies",
    "write_strategy_table",
]


class EvaluationError(ValueError):
    pass


def classify_base(original: str, corrected: str, truth: str) -> str:
    """One of ``"TP"``, ``"FP"``, ``"FN"``, ``"TN"``.

    An error changed into a different wrong base stays a false negative.
    """
    if original != truth:
        return "TP" if corrected == truth else "FN"
    return "TN" if corrected == truth else "FP"


@dataclass(frozen=True)
class CorrectionMetrics:
    tp: int
    fp: int
    fn: int
    tn: int
    reads: int
    erroneous_reads: int

    @property
    def correction_ratio(self) -> float:
        after = self.fn + self.fp
        return math.inf if after == 0 else (self.tp + self.fn) / after

    @property
    def sensitivity(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 1.0

    @property
    def specificity(self) -> float:
        return self.tn / (self.tn + self.fp) if self.tn + self.fp else 1.0

    @property
    def pct_erroneous_reads(self) -> float:
        return 100.0 * self.erroneous_reads / self.reads if self.reads else 0.0

    def as_dict(self) -> dict:
        ratio = self.correction_ratio
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
            "reads": self.reads, "erroneous_reads": self.erroneous_reads,
            "correction_ratio": "inf" if math.isinf(ratio) else ratio,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "pct_erroneous_reads": self.pct_erroneous_reads,
        }


def evaluate(original: Iterable[ReadRecord], corrected: Iterable[ReadRecord],
             truth: Iterable[ReadRecord]) -> CorrectionMetrics:
    """Aggregate per-base classes over read triples paired by position and id."""
    tp = fp = fn = tn = reads = bad_reads = 0
    sentinel = object()
    it = zip_longest_strict(original, corrected, truth, sentinel)
    for o, c, t in it:
        oid, cid, tid = (x.id.split()[0] for x in (o, c, t))
        if not oid == cid == tid:
            raise EvaluationError(f"read ids differ: {o.id!r} / {c.id!r} / {t.id!r}")
        if not len(o.sequence) == len(c.sequence) == len(t.sequence):
            raise EvaluationError(f"read {oid!r}: sequence lengths differ")
        ob = np.frombuffer(o.sequence.upper().encode(), dtype=np.uint8)
        cb = np.frombuffer(c.sequence.upper().encode(), dtype=np.uint8)
        tb = np.frombuffer(t.sequence.upper().encode(), dtype=np.uint8)
        err = ob != tb
        ok = cb == tb
        tp += int(np.count_nonzero(err & ok))
        fn += int(np.count_nonzero(err & ~ok))
        fp += int(np.count_nonzero(~err & ~ok))
        tn += int(np.count_nonzero(~err & ok))
        reads += 1
        bad_reads += int(not ok.all())
    return CorrectionMetrics(tp, fp, fn, tn, reads, bad_reads)


def zip_longest_strict(a, b, c, sentinel):
    ia, ib, ic = iter(a), iter(b), iter(c)
    while True:
        x, y, z = next(ia, sentinel), next(ib, sentinel), next(ic, sentinel)
        if x is sentinel and y is sentinel and z is sentinel:
            return
        if x is sentinel or y is sentinel or z is sentinel:
            raise EvaluationError("original, corrected and truth hold different read counts")
        yield x, y, z


# ---------------------------------------------------------------- graph strategies

STRATEGIES = ("KAF", "KAF+TIP", "KAF+UAF", "KAF+TIP+UAF")


@dataclass(frozen=True)
class StrategyResult:
    solidity: int
    strategy: str
    fp: int
    fn: int


def evaluate_graph_strategies(genome: str, reads: Sequence[ReadRecord], k: int,
                              solidity_thresholds: Sequence[int] = (2, 3),
                              strategies: Sequence[str] = STRATEGIES,
                              unitig_threshold: float = 5,
                              max_rounds: int = 5) -> list[StrategyResult]:
    """Erroneous / missing graph k-mers for each (solidity, strategy) cell.

    KAF is the plain solid-k-mer graph; TIP and UAF add tip removal and
    unitig-abundance filtering.
    """
    for s in strategies:
        if s not in STRATEGIES:
            raise ValueError(f"unknown strategy {s!r}")
    counts = count_kmers(reads, k)
    genome_kmers = {km for _, km in iter_kmers(genome, k)}
    out = []
    for t in solidity_thresholds:
        base = build_graph(filter_solid(counts, t), counts, k)
        for s in strategies:
            if s == "KAF":
                g = base
            else:
                cfg = CleaningConfig(unitig_threshold=unitig_threshold, max_rounds=max_rounds,
                                     tip_removal="TIP" in s, unitig_filter="UAF" in s)
                g = clean_graph(base, cfg)
            present = g.kmer_set()
            out.append(StrategyResult(t, s, len(present - genome_kmers),
                                      len(genome_kmers - present)))
    return out


def write_strategy_table(results: Sequence[StrategyResult], path: str | Path) -> None:
    """TSV with one row per solidity threshold and ``fp/fn`` per strategy column."""
    strategies = [s for s in STRATEGIES if any(r.strategy == s for r in results)]
    rows: dict[int, dict[str, StrategyResult]] = {}
    for r in results:
        rows.setdefault(r.solidity, {})[r.strategy] = r
    with open(path, "w") as out:
        out.write("solidity\t" + "\t".join(strategies) + "\n")
        for t in sorted(rows):
            cells = [f"{rows[t][s].fp}/{rows[t][s].fn}" if s in rows[t] else "" for s in strategies]
            out.write(f"{t}\t" + "\t".join(cells) + "\n")
