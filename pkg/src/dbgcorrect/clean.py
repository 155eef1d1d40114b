"""Graph cleaning: tip removal and unitig-abundance filtering, iterated."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from .cdbg import CompactedDbg, GraphError, remove_unitigs
from .ksel import histogram_valley

logger = logging.getLogger(__name__)

__all__ = [
    "CleaningConfig",
    "RoundStats",
    "clean_graph",
    "filter_unitigs",
    "find_tips",
    "infer_unitig_threshold",
]

DEFAULT_UNITIG_THRESHOLD = 5


@dataclass(frozen=True)
class CleaningConfig:
    unitig_threshold: float = DEFAULT_UNITIG_THRESHOLD
    max_rounds: int = 5
    tip_removal: bool = True
    unitig_filter: bool = True
    solidity_threshold: Optional[int] = None

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.unitig_threshold < 1:
            raise ValueError("unitig threshold must be >= 1")
        if self.solidity_threshold is not None and self.unitig_threshold < self.solidity_threshold:
            raise ValueError(
                f"unitig threshold {self.unitig_threshold} is below the solidity "
                f"threshold {self.solidity_threshold}")


@dataclass(frozen=True)
class RoundStats:
    round: int
    tips_removed: int
    low_abundance_removed: int
    unitigs_after: int
    kmers_after: int


def find_tips(graph: CompactedDbg) -> set[int]:
    """Unitigs shorter than 2(k-1) with no adjacency at one end (or both)."""
    bound = 2 * (graph.k - 1)
    links = graph.links
    return {u.id for u in graph.unitigs
            if len(u.sequence) < bound and (not links[2 * u.id] or not links[2 * u.id + 1])}


def filter_unitigs(graph: CompactedDbg, threshold: float) -> set[int]:
    """Unitigs whose mean k-mer abundance is strictly below ``threshold``."""
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    return {u.id for u in graph.unitigs if u.mean_abundance < threshold}


def infer_unitig_threshold(graph: CompactedDbg, default: float = DEFAULT_UNITIG_THRESHOLD) -> float:
    """First valley of the histogram of unitig mean abundances (rounded).

    Falls back to ``default`` when the histogram has no valley.
    """
    hist: dict[int, int] = {}
    for u in graph.unitigs:
        a = max(1, int(round(u.mean_abundance)))
        hist[a] = hist.get(a, 0) + 1
    valley = histogram_valley(hist)
    if valley is None:
        logger.warning("unitig abundance histogram has no valley; using %s", default)
        return default
    return float(valley)


def clean_graph(graph: CompactedDbg, cfg: CleaningConfig = CleaningConfig(),
                stats: Optional[list] = None) -> CompactedDbg:
    """Alternate tip removal and low-abundance filtering until nothing changes.

    Each removal is followed by recompaction; merged unitigs keep the exact
    count sum of their k-mers, so their mean is recomputed over the new
    content. ``stats`` (if given) receives one :class:`RoundStats` per round.
    """
    for rnd in range(1, cfg.max_rounds + 1):
        n_tips = n_low = 0
        if cfg.tip_removal:
            tips = find_tips(graph)
            n_tips = len(tips)
            graph = remove_unitigs(graph, tips)
            _check_not_empty(graph)
        if cfg.unitig_filter:
            low = filter_unitigs(graph, cfg.unitig_threshold)
            n_low = len(low)
            graph = remove_unitigs(graph, low)
            _check_not_empty(graph)
        logger.info("cleaning round %d: %d tips, %d low-abundance unitigs removed; %d left",
                    rnd, n_tips, n_low, len(graph))
        if stats is not None:
            stats.append(RoundStats(rnd, n_tips, n_low, len(graph), graph.n_kmers()))
        if n_tips == 0 and n_low == 0:
            break
    return graph


def _check_not_empty(graph: CompactedDbg) -> None:
    if len(graph) == 0:
        raise GraphError("graph eliminated by cleaning; lower thresholds")
