"""Full-length, substitution-only alignment of reads onto a compacted graph.

Seeds of length ``s`` are looked up at every read position against an index
of unitig positions (optionally subsampled with a stride). Every distinct
anchor, i.e. an oriented unitig plus the diagonal placing the read on it, is
extended to both read ends through the graph. Extensions are memoized on
(oriented unitig, read offset) and return the minimum number of mismatches,
how many distinct spellings reach it (capped at two) and the lexicographically
smallest such spelling. Reads whose optimum is reached by two different
corrected sequences are ambiguous.
"""

from __future__ import annotations

import enum
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import islice
from multiprocessing import get_context
from operator import ne
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .cdbg import CompactedDbg
from .kmers import revcomp
from .seqio import ReadRecord

logger = logging.getLogger(__name__)

__all__ = [
    "AlignmentStatus",
    "GraphAlignment",
    "MapperConfig",
    "MappingStats",
    "SeedIndex",
    "align_read",
    "build_seed_index",
    "correct_reads",
    "map_reads",
    "write_alignments_tsv",
]


class AlignmentStatus(str, enum.Enum):
    MAPPED = "mapped"
    NO_SEED = "unmapped_no_seed"
    OVER_BUDGET = "unmapped_over_budget"
    AMBIGUOUS = "unmapped_ambiguous"


@dataclass(frozen=True)
class MapperConfig:
    max_mismatches: int = 10
    seed_length: Optional[int] = None  # None: min(31, k)
    stride: int = 1
    ambiguity_policy: str = "reject"  # or "pick_deterministic"

    def __post_init__(self):
        if self.max_mismatches < 0:
            raise ValueError("max_mismatches must be >= 0")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.seed_length is not None and self.seed_length < 1:
            raise ValueError("seed_length must be >= 1")
        if self.ambiguity_policy not in ("reject", "pick_deterministic"):
            raise ValueError(f"unknown ambiguity policy {self.ambiguity_policy!r}")

    def seed_length_for(self, k: int) -> int:
        s = min(31, k) if self.seed_length is None else self.seed_length
        if s > k:
            raise ValueError(f"seed length {s} exceeds k={k}")
        return s


@dataclass
class SeedIndex:
    """Canonical s-mer -> tuple of (unitig id, offset, stored reverse-complemented)."""

    seed_length: int
    stride: int
    entries: dict[str, tuple[tuple[int, int, bool], ...]]

    def lookup(self, smer: str) -> tuple[tuple[int, int, bool], ...]:
        f = smer.upper()
        r = revcomp(f)
        return self.entries.get(r if r < f else f, ())

    def n_positions(self) -> int:
        return sum(len(v) for v in self.entries.values())


def build_seed_index(graph: CompactedDbg, cfg: MapperConfig = MapperConfig()) -> SeedIndex:
    """Index positions 0, r, 2r, ... and the last position of every unitig."""
    s = cfg.seed_length_for(graph.k)
    r = cfg.stride
    entries: dict[str, list] = {}
    for u in graph.unitigs:
        seq = u.sequence
        n = len(seq)
        if n < s:
            continue
        rc = revcomp(seq)
        positions = list(range(0, n - s + 1, r))
        if positions[-1] != n - s:
            positions.append(n - s)
        for o in positions:
            f = seq[o:o + s]
            b = rc[n - o - s:n - o]
            if b < f:
                entries.setdefault(b, []).append((u.id, o, True))
            else:
                entries.setdefault(f, []).append((u.id, o, False))
    return SeedIndex(s, r, {key: tuple(v) for key, v in entries.items()})


@dataclass(frozen=True)
class GraphAlignment:
    read_id: str
    status: AlignmentStatus
    mismatches: Optional[int] = None
    path: tuple[int, ...] = ()
    start_offset: int = 0
    corrected_sequence: Optional[str] = None

    @property
    def mapped(self) -> bool:
        return self.status is AlignmentStatus.MAPPED

    def path_string(self) -> str:
        return ",".join(f"{n >> 1}{'-' if n & 1 else '+'}" for n in self.path)


def _hamming(a: str, b: str) -> int:
    if a == b:
        return 0
    return sum(map(ne, a, b))


def _merge(best, cand):
    # tuples: (mismatches, distinct optimal spellings capped at 2, smallest spelling, ...)
    if best is None or cand[0] < best[0]:
        return cand
    if cand[0] > best[0]:
        return best
    n = min(2, best[1] + cand[1])
    keep = cand if cand[2] < best[2] else best
    return (keep[0], n) + keep[2:]


def align_read(read: ReadRecord, graph: CompactedDbg, index: SeedIndex,
               cfg: MapperConfig = MapperConfig()) -> GraphAlignment:
    seq = read.sequence.upper()
    L = len(seq)
    s = index.seed_length
    if L < s:
        return GraphAlignment(read.id, AlignmentStatus.NO_SEED)
    if L + 100 > sys.getrecursionlimit():
        sys.setrecursionlimit(2 * L + 200)
    k = graph.k
    budget = cfg.max_mismatches
    oriented = graph.oriented
    links = graph.links
    preds = graph.predecessors_table
    unitigs = graph.unitigs
    entries = index.entries
    rcs = revcomp(seq)

    anchors = set()
    for i in range(L - s + 1):
        f = seq[i:i + s]
        r = rcs[L - i - s:L - i]
        key = r if r < f else f
        hits = entries.get(key)
        if not hits:
            continue
        f_is_key = key == f
        r_is_key = key == r  # both hold for a palindromic seed
        for uid, off, stored_rc in hits:
            # stored_rc: the unitig's forward s-mer is the reverse complement of the key
            if (f_is_key and not stored_rc) or (r_is_key and stored_rc):
                anchors.add((2 * uid, off - i))
            if (f_is_key and stored_rc) or (r_is_key and not stored_rc):
                anchors.add((2 * uid + 1, len(unitigs[uid].sequence) - off - s - i))
    if not anchors:
        return GraphAlignment(read.id, AlignmentStatus.NO_SEED)

    right_memo: dict = {}
    left_memo: dict = {}

    def right(node: int, j: int):
        # best spelling of seq[j:] through successors of `node`, whose end sits at j
        key = (node, j)
        if key in right_memo:
            return right_memo[key]
        best = None
        rem = L - j
        for c in links[node]:
            cs = oriented[c]
            take = min(rem, len(cs) - k + 1)
            seg = cs[k - 1:k - 1 + take]
            mm = _hamming(seq[j:j + take], seg)
            if mm > budget:
                continue
            if take == rem:
                cand = (mm, 1, seg, (c,))
            else:
                sub = right(c, j + take)
                if sub is None or mm + sub[0] > budget:
                    continue
                cand = (mm + sub[0], sub[1], seg + sub[2], (c,) + sub[3])
            best = _merge(best, cand)
        right_memo[key] = best
        return best

    def left(node: int, j: int):
        # best spelling of seq[:j] through predecessors of `node`, whose start sits at j
        key = (node, j)
        if key in left_memo:
            return left_memo[key]
        best = None
        for p in preds[node]:
            ps = oriented[p]
            avail = len(ps) - k + 1
            take = min(j, avail)
            seg = ps[avail - take:avail]
            mm = _hamming(seq[j - take:j], seg)
            if mm > budget:
                continue
            if take == j:
                cand = (mm, 1, seg, (p,), avail - take)
            else:
                sub = left(p, j - take)
                if sub is None or mm + sub[0] > budget:
                    continue
                cand = (mm + sub[0], sub[1], sub[2] + seg, sub[3] + (p,), sub[4])
            best = _merge(best, cand)
        left_memo[key] = best
        return best

    best = None
    spellings: set[str] = set()
    ambiguous = False
    for node, diag in sorted(anchors):
        us = oriented[node]
        n = len(us)
        rs = max(0, -diag)
        re = min(L, n - diag)
        mid = us[rs + diag:re + diag]
        mm = _hamming(seq[rs:re], mid)
        if mm > budget:
            continue
        if rs > 0:
            lt = left(node, rs)
            if lt is None:
                continue
            lmm, lcount, lseq, lpath, offset = lt
        else:
            lmm, lcount, lseq, lpath, offset = 0, 1, "", (), diag
        if re < L:
            rt = right(node, re)
            if rt is None:
                continue
            rmm, rcount, rseq, rpath = rt
        else:
            rmm, rcount, rseq, rpath = 0, 1, "", ()
        total = mm + lmm + rmm
        if total > budget:
            continue
        cand = (total, min(2, lcount * rcount), lseq + mid + rseq, lpath + (node,) + rpath, offset)
        if best is None or total < best[0]:
            spellings = {cand[2]}
            ambiguous = cand[1] > 1
            best = cand
        elif total == best[0]:
            spellings.add(cand[2])
            ambiguous = ambiguous or cand[1] > 1
            if cand[2] < best[2]:
                best = cand
    if best is None:
        return GraphAlignment(read.id, AlignmentStatus.OVER_BUDGET)
    ambiguous = ambiguous or len(spellings) > 1
    if ambiguous and cfg.ambiguity_policy == "reject":
        return GraphAlignment(read.id, AlignmentStatus.AMBIGUOUS, best[0])
    path, offset = _trim_path(best[3], best[4], L, k, oriented)
    return GraphAlignment(read.id, AlignmentStatus.MAPPED, best[0], path, offset, best[2])


def _trim_path(path, offset, L, k, oriented):
    """Drop end nodes that only contribute bases of a (k-1)-overlap."""
    path = list(path)
    while len(path) > 1 and offset >= len(oriented[path[0]]) - k + 1:
        offset -= len(oriented[path[0]]) - k + 1
        path.pop(0)
    # read end measured in coordinates of the last node
    spelled = len(oriented[path[0]]) + sum(len(oriented[n]) - k + 1 for n in path[1:])
    end_in_last = len(oriented[path[-1]]) - (spelled - (offset + L))
    while len(path) > 1 and end_in_last <= k - 1:
        end_in_last += len(oriented[path[-2]]) - k + 1
        path.pop()
    return tuple(path), offset


# ---------------------------------------------------------------- batches

@dataclass
class MappingStats:
    total: int = 0
    by_status: dict[str, int] = field(
        default_factory=lambda: {s.value: 0 for s in AlignmentStatus})
    corrected_bases: int = 0

    def add(self, read: ReadRecord, aln: GraphAlignment) -> None:
        self.total += 1
        self.by_status[aln.status.value] += 1
        if aln.mapped:
            self.corrected_bases += aln.mismatches

    @property
    def mapped(self) -> int:
        return self.by_status[AlignmentStatus.MAPPED.value]

    def as_dict(self) -> dict[str, int]:
        out = {"reads_total": self.total, "corrected_bases": self.corrected_bases}
        out.update({f"reads_{k}": v for k, v in self.by_status.items()})
        return out


_WORKER: dict = {}


def _init_worker(graph, index, cfg):
    _WORKER["args"] = (graph, index, cfg)


def _align_batch(batch: list[ReadRecord]) -> list[GraphAlignment]:
    graph, index, cfg = _WORKER["args"]
    return [align_read(r, graph, index, cfg) for r in batch]


def _batches(reads: Iterable[ReadRecord], size: int) -> Iterator[list[ReadRecord]]:
    it = iter(reads)
    while True:
        batch = list(islice(it, size))
        if not batch:
            return
        yield batch


def map_reads(reads: Iterable[ReadRecord], graph: CompactedDbg, index: SeedIndex,
              cfg: MapperConfig = MapperConfig(), threads: int = 1,
              batch_size: int = 2000) -> Iterator[tuple[ReadRecord, GraphAlignment]]:
    """Yield ``(read, alignment)`` pairs in input order.

    With ``threads > 1`` batches are aligned in worker processes sharing the
    graph and index read-only; output order is unaffected.
    """
    if threads <= 1:
        for r in reads:
            yield r, align_read(r, graph, index, cfg)
        return
    ctx = get_context("fork") if os.name == "posix" else None
    with ProcessPoolExecutor(max_workers=threads, mp_context=ctx, initializer=_init_worker,
                             initargs=(graph, index, cfg)) as pool:
        batches = _batches(reads, batch_size)
        window = []
        # keep a bounded number of batches in flight; results are consumed in order
        for batch in batches:
            window.append((batch, pool.submit(_align_batch, batch)))
            if len(window) >= 4 * threads:
                b, fut = window.pop(0)
                yield from zip(b, fut.result())
        for b, fut in window:
            yield from zip(b, fut.result())


def apply_alignment(read: ReadRecord, aln: GraphAlignment, tag_status: bool = False) -> ReadRecord:
    """The corrected record for a mapped read, the original otherwise."""
    seq = aln.corrected_sequence if aln.mapped else read.sequence
    rid = read.id
    if tag_status:
        mm = "" if aln.mismatches is None else f" mm={aln.mismatches}"
        rid = f"{rid} status={aln.status.value}{mm}"
    return ReadRecord(rid, seq, read.quality)


def correct_reads(reads: Iterable[ReadRecord], graph: CompactedDbg, index: SeedIndex,
                  cfg: MapperConfig = MapperConfig(), threads: int = 1,
                  tag_status: bool = False) -> tuple[list[ReadRecord], MappingStats]:
    """Replace each mapped read by its graph spelling; keep unmapped reads as is."""
    stats = MappingStats()
    out = []
    for r, aln in map_reads(reads, graph, index, cfg, threads):
        stats.add(r, aln)
        out.append(apply_alignment(r, aln, tag_status))
    return out, stats


def write_alignments_tsv(pairs: Iterable[tuple[ReadRecord, GraphAlignment]],
                         path: str | Path) -> MappingStats:
    stats = MappingStats()
    with open(path, "w") as out:
        out.write("read_id\tstatus\tmismatches\tpath\n")
        for r, aln in pairs:
            stats.add(r, aln)
            mm = "" if aln.mismatches is None else str(aln.mismatches)
            out.write(f"{aln.read_id}\t{aln.status.value}\t{mm}\t{aln.path_string()}\n")
    return stats
