"""In-memory compacted de Bruijn graph.

Unitigs are stored in canonical orientation. An oriented unitig ("node") is
encoded as ``2 * id + strand`` with strand 1 meaning reverse complement, so
``node ^ 1`` flips orientation. ``links[node]`` lists the nodes whose
sequence follows ``node`` with a (k-1)-base overlap; predecessors are derived
through the reverse-complement symmetry ``a -> b  <=>  b^1 -> a^1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Optional, Union

from .kmers import KmerCountTable, _ACGT, canonical, check_k, iter_kmers, revcomp
from .seqio import read_gfa

logger = logging.getLogger(__name__)

__all__ = [
    "GraphError",
    "Unitig",
    "CompactedDbg",
    "build_graph",
    "compact_kmers",
    "graph_from_gfa",
    "graph_kmer_audit",
    "remove_unitigs",
    "reweigh",
    "unitig_abundance",
]


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Unitig:
    id: int
    sequence: str
    count_sum: int
    k: int

    @property
    def n_kmers(self) -> int:
        return len(self.sequence) - self.k + 1

    @property
    def mean_abundance(self) -> float:
        return self.count_sum / self.n_kmers

    def __len__(self) -> int:
        return len(self.sequence)


@dataclass(frozen=True, eq=False)
class CompactedDbg:
    k: int
    unitigs: tuple[Unitig, ...]
    links: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.unitigs)

    @cached_property
    def oriented(self) -> list[str]:
        """Sequence of every node, indexed by node number."""
        out = []
        for u in self.unitigs:
            out.append(u.sequence)
            out.append(revcomp(u.sequence))
        return out

    @cached_property
    def predecessors_table(self) -> list[tuple[int, ...]]:
        return [tuple(sorted(m ^ 1 for m in self.links[n ^ 1])) for n in range(len(self.links))]

    def successors(self, node: int) -> tuple[int, ...]:
        return self.links[node]

    def predecessors(self, node: int) -> tuple[int, ...]:
        return self.predecessors_table[node]

    def edges(self) -> list[tuple[int, int]]:
        """One (from, to) pair per adjacency and its reverse-complement twin."""
        out = []
        for a, succ in enumerate(self.links):
            for b in succ:
                if (a, b) <= (b ^ 1, a ^ 1):
                    out.append((a, b))
        return out

    def kmers(self) -> Iterator[str]:
        for u in self.unitigs:
            for _, km in iter_kmers(u.sequence, self.k):
                yield km

    def kmer_set(self) -> set[str]:
        return set(self.kmers())

    def n_kmers(self) -> int:
        return sum(u.n_kmers for u in self.unitigs)

    def degree(self, uid: int) -> tuple[int, int]:
        """(adjacencies at the start, adjacencies at the end) of a unitig."""
        return len(self.links[2 * uid + 1]), len(self.links[2 * uid])

    def validate(self) -> None:
        """Raise ``GraphError`` if any structural invariant is violated."""
        k = self.k
        seen: set[str] = set()
        for i, u in enumerate(self.unitigs):
            if u.id != i:
                raise GraphError(f"unitig at index {i} has id {u.id}")
            if len(u.sequence) < k:
                raise GraphError(f"unitig {i} shorter than k")
            for _, km in iter_kmers(u.sequence, k):
                if km in seen:
                    raise GraphError(f"k-mer {km} appears twice")
                seen.add(km)
        for a, succ in enumerate(self.links):
            for b in succ:
                if self.oriented[a][-(k - 1):] != self.oriented[b][:k - 1]:
                    raise GraphError(f"link {a}->{b} lacks a {k - 1}-overlap")
                if (a ^ 1) not in self.links[b ^ 1]:
                    raise GraphError(f"link {a}->{b} has no reverse-complement twin")
        for a, succ in enumerate(self.links):
            if len(succ) == 1:
                b = succ[0]
                if (b >> 1) != (a >> 1) and len(self.predecessors(b)) == 1:
                    raise GraphError(f"nodes {a} and {b} are compactible")


# ---------------------------------------------------------------- compaction

def compact_kmers(kmers: Iterable[str], k: int,
                  counts: Optional[Mapping[str, int]] = None) -> list[tuple[str, int]]:
    """Maximal non-branching paths over a set of canonical k-mers.

    Returns ``(sequence, summed count)`` per unitig (sum is 0 without counts).
    Self-loop and hairpin edges are never merged. An isolated cycle is opened
    at its smallest canonical k-mer, read in that k-mer's forward orientation.
    """
    canon = set(kmers)
    present = canon | {revcomp(x) for x in canon}
    bases = "ACGT"

    def step(x: str) -> Optional[str]:
        suffix = x[1:]
        nxt = None
        for c in bases:
            y = suffix + c
            if y in present:
                if nxt is not None:
                    return None
                nxt = y
        if nxt is None:
            return None
        prefix = nxt[:-1]
        if sum((c + prefix) in present for c in bases) != 1:
            return None
        return nxt

    visited: set[str] = set()
    out = []
    for x in sorted(canon):
        if x in visited:
            continue
        right = [x]
        seen = {x}
        cur = x
        cycle = False
        while True:
            y = step(cur)
            if y is None:
                break
            cy = canonical(y)
            if cy in seen:
                cycle = y == x
                break
            right.append(y)
            seen.add(cy)
            cur = y
        if cycle:
            path = _open_cycle(right)
        else:
            left = []
            cur = revcomp(x)
            while True:
                y = step(cur)
                if y is None:
                    break
                cy = canonical(y)
                if cy in seen:
                    break
                left.append(y)
                seen.add(cy)
                cur = y
            path = [revcomp(y) for y in reversed(left)] + right
        visited |= seen
        seq = path[0] + "".join(p[-1] for p in path[1:])
        total = sum(counts[c] for c in seen) if counts is not None else 0
        out.append((seq, total))
    return out


def _open_cycle(path: list[str]) -> list[str]:
    smallest = min(canonical(p) for p in path)
    if smallest not in path:
        path = [revcomp(p) for p in reversed(path)]
    i = path.index(smallest)
    return path[i:] + path[:i]


def _assemble(k: int, pieces: Iterable[tuple[str, int]]) -> CompactedDbg:
    """Number unitigs by canonical sequence and derive links from their ends."""
    canon_pieces = sorted((min(s, revcomp(s)), c) for s, c in pieces)
    unitigs = tuple(Unitig(i, s, int(c), k) for i, (s, c) in enumerate(canon_pieces))
    start: dict[str, int] = {}
    for u in unitigs:
        start[u.sequence[:k]] = 2 * u.id
        start[revcomp(u.sequence[-k:])] = 2 * u.id + 1
    links = []
    for u in unitigs:
        for node, seq in ((2 * u.id, u.sequence), (2 * u.id + 1, revcomp(u.sequence))):
            tail = seq[len(seq) - k + 1:]
            succ = sorted(start[tail + c] for c in "ACGT" if tail + c in start)
            links.append(tuple(succ))
    return CompactedDbg(k, unitigs, tuple(links))


def build_graph(solid: Iterable[str], counts: Union[KmerCountTable, Mapping[str, int]],
                k: int) -> CompactedDbg:
    """Compacted graph whose k-mer content is exactly ``solid``.

    ``counts`` supplies the abundances used for each unitig's mean.
    """
    check_k(k)
    solid = sorted({canonical(str(x)) for x in solid})
    if not solid:
        raise GraphError("no solid k-mers")
    if any(len(x) != k or not _ACGT.issuperset(x) for x in solid):
        raise GraphError(f"solid set holds words that are not ACGT {k}-mers")
    if isinstance(counts, KmerCountTable):
        if counts.k != k:
            raise GraphError(f"count table k={counts.k} does not match k={k}")
        found = counts.lookup(solid)
        kcounts = dict(zip(solid, found.tolist()))
    else:
        kcounts = {x: int(counts.get(x, 0)) for x in solid}
    missing = [x for x, c in kcounts.items() if c == 0]
    if missing:
        raise GraphError(f"{len(missing)} solid k-mers are absent from the count table, "
                         f"e.g. {missing[0]}")
    graph = _assemble(k, compact_kmers(solid, k, kcounts))
    logger.info("built graph: %d unitigs from %d k-mers", len(graph), len(solid))
    return graph


def remove_unitigs(graph: CompactedDbg, doomed: Iterable[int]) -> CompactedDbg:
    """Drop unitigs, then merge the chains that became non-branching.

    Merged unitigs carry the sum of their parts' counts, which equals the
    count sum over their new k-mer content.
    """
    doomed = set(doomed)
    if not doomed:
        return graph
    k = graph.k
    kept = [u.id for u in graph.unitigs if u.id not in doomed]
    succ = {}
    for uid in kept:
        for n in (2 * uid, 2 * uid + 1):
            succ[n] = tuple(m for m in graph.links[n] if (m >> 1) not in doomed)

    def pred(n):
        return [m ^ 1 for m in succ[n ^ 1]]

    def step(n):
        s = succ[n]
        if len(s) != 1:
            return None
        m = s[0]
        if (m >> 1) == (n >> 1) or len(pred(m)) != 1:
            return None
        return m

    seqs = graph.oriented
    visited: set[int] = set()
    pieces = []
    for uid in kept:
        if uid in visited:
            continue
        start = 2 * uid
        right = [start]
        seen = {uid}
        cycle = False
        cur = start
        while True:
            m = step(cur)
            if m is None:
                break
            if (m >> 1) in seen:
                cycle = m == start
                break
            right.append(m)
            seen.add(m >> 1)
            cur = m
        visited |= seen
        if cycle:
            kmers = [km for n in right for _, km in iter_kmers(seqs[n], k)]
            total = sum(graph.unitigs[n >> 1].count_sum for n in right)
            (seq, _), = compact_kmers(kmers, k)
            pieces.append((seq, total))
            continue
        left = []
        cur = start ^ 1
        while True:
            m = step(cur)
            if m is None or (m >> 1) in seen:
                break
            left.append(m)
            seen.add(m >> 1)
            cur = m
        visited |= seen
        chain = [n ^ 1 for n in reversed(left)] + right
        seq = seqs[chain[0]] + "".join(seqs[n][k - 1:] for n in chain[1:])
        pieces.append((seq, sum(graph.unitigs[n >> 1].count_sum for n in chain)))
    return _assemble(k, pieces)


def graph_from_gfa(path: str | Path, k: Optional[int] = None) -> CompactedDbg:
    """Load a GFA1 graph written by :func:`dbgcorrect.seqio.write_gfa`.

    ``k`` is taken from the ``KL`` header tag or from the L-line overlap when
    not given. Unitigs are renumbered by canonical sequence.
    """
    hk, segments, links = read_gfa(path)
    if k is None:
        k = hk
    if k is None and links:
        k = int(links[0].overlap.rstrip("M")) + 1
    if k is None:
        raise GraphError(f"{path}: cannot infer k (no KL tag and no links)")
    order = sorted(range(len(segments)),
                   key=lambda i: min(segments[i].sequence, revcomp(segments[i].sequence)))
    new_id = {segments[i].name: j for j, i in enumerate(order)}
    unitigs = []
    flipped = {}
    for j, i in enumerate(order):
        s = segments[i]
        seq = min(s.sequence, revcomp(s.sequence))
        flipped[s.name] = seq != s.sequence
        n = len(seq) - k + 1
        if s.kmer_count_sum is not None:
            total = s.kmer_count_sum
        elif s.mean_abundance is not None:
            total = round(s.mean_abundance * n)
        else:
            total = 0
        unitigs.append(Unitig(j, seq, total, k))
    succ: list[set[int]] = [set() for _ in range(2 * len(unitigs))]
    for ln in links:
        try:
            a = 2 * new_id[ln.from_name] + ((ln.from_orient == "-") ^ flipped[ln.from_name])
            b = 2 * new_id[ln.to_name] + ((ln.to_orient == "-") ^ flipped[ln.to_name])
        except KeyError as e:
            raise GraphError(f"{path}: link refers to unknown segment {e}") from None
        succ[a].add(b)
        succ[b ^ 1].add(a ^ 1)
    return CompactedDbg(k, tuple(unitigs), tuple(tuple(sorted(s)) for s in succ))


# ---------------------------------------------------------------- measurements

def _unitig_counts(u: Unitig, counts: Union[KmerCountTable, Mapping[str, int]]) -> list[int]:
    kms = [km for _, km in iter_kmers(u.sequence, u.k)]
    if isinstance(counts, KmerCountTable):
        vals = counts.lookup(kms).tolist()
    else:
        vals = [counts.get(km, 0) for km in kms]
    if len(kms) != u.n_kmers or any(v == 0 for v in vals):
        raise GraphError(f"unitig {u.id} has k-mers missing from the count table")
    return vals


def unitig_abundance(u: Unitig, counts: Union[KmerCountTable, Mapping[str, int]]) -> float:
    """Mean count of the unitig's k-mers, recomputed from ``counts``."""
    vals = _unitig_counts(u, counts)
    return sum(vals) / len(vals)


def reweigh(graph: CompactedDbg, counts: Union[KmerCountTable, Mapping[str, int]]) -> CompactedDbg:
    """Same graph with every unitig's count sum recomputed from ``counts``.

    A graph read back from GFA only carries what the tags held; this restores
    exact abundances before cleaning.
    """
    table_k = getattr(counts, "k", graph.k)
    if table_k != graph.k:
        raise GraphError(f"count table k={table_k} differs from graph k={graph.k}")
    unitigs = tuple(replace(u, count_sum=sum(_unitig_counts(u, counts))) for u in graph.unitigs)
    return CompactedDbg(graph.k, unitigs, graph.links)


def graph_kmer_audit(graph: CompactedDbg, reference: str) -> tuple[int, int]:
    """(erroneous graph k-mers, genomic k-mers missing from the graph)."""
    genome = {km for _, km in iter_kmers(reference, graph.k)}
    present = graph.kmer_set()
    return len(present - genome), len(genome - present)
