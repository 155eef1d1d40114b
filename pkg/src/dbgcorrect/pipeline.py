"""End-to-end correction driver: choose k, count, filter, build, clean,
index, map and rewrite the reads."""

from __future__ import annotations

import json
import logging
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

from .cdbg import build_graph
from .clean import CleaningConfig, clean_graph, infer_unitig_threshold
from .kmers import check_k, count_kmers, filter_solid, save_count_table
from .ksel import choose_k
from .mapper import MapperConfig, MappingStats, apply_alignment, build_seed_index, map_reads
from .seqio import read_sequences, write_gfa, write_sequences

logger = logging.getLogger(__name__)

__all__ = ["PipelineConfig", "PipelineError", "CorrectionRunReport", "run_correction",
           "format_for_path"]


class PipelineError(RuntimeError):
    """A stage failed; ``stage`` names it and ``__cause__`` holds the original error."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage


@dataclass(frozen=True)
class PipelineConfig:
    reads_path: Union[str, Path]
    out_path: Union[str, Path]
    k: Union[int, str] = "auto"
    solidity_threshold: int = 2
    cleaning: CleaningConfig = CleaningConfig()
    infer_unitig_threshold: bool = False
    mapper: MapperConfig = MapperConfig()
    threads: int = 1
    k_ladder: Optional[Sequence[int]] = None
    gfa_path: Optional[Union[str, Path]] = None
    report_path: Optional[Union[str, Path]] = None
    intermediates_dir: Optional[Union[str, Path]] = None
    tag_status: bool = False

    def __post_init__(self):
        if self.k != "auto":
            if not isinstance(self.k, int):
                raise ValueError(f"k must be an odd integer or 'auto', got {self.k!r}")
            check_k(self.k)
        if self.solidity_threshold < 1:
            raise ValueError("solidity threshold must be >= 1")
        if not self.infer_unitig_threshold and self.cleaning.unitig_threshold < self.solidity_threshold:
            raise ValueError(f"unitig threshold {self.cleaning.unitig_threshold} is below the "
                             f"solidity threshold {self.solidity_threshold}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class CorrectionRunReport:
    chosen_k: int
    k_fallback: bool
    reads_total: int
    distinct_kmers: int
    solid_kmers: int
    unitigs_before: int
    unitigs_after: int
    kmers_after: int
    cleaning_rounds: int
    unitig_threshold: float
    seed_positions: int
    corrected_bases: int
    reads_mapped: int
    reads_unmapped_no_seed: int
    reads_unmapped_over_budget: int
    reads_unmapped_ambiguous: int
    timings: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        """Flat dict; timing entries are prefixed with ``time_``."""
        d = asdict(self)
        timings = d.pop("timings")
        d.update({f"time_{k}": round(v, 4) for k, v in timings.items()})
        return d

    def write_json(self, path: Union[str, Path]) -> None:
        with open(path, "w") as out:
            json.dump(self.as_dict(), out, indent=2, sort_keys=True)
            out.write("\n")


def format_for_path(path: Union[str, Path]) -> str:
    name = str(path).lower()
    if name.endswith(".gz"):
        name = name[:-3]
    return "fastq" if name.endswith((".fq", ".fastq")) else "fasta"


class _Run:
    def __init__(self):
        self.timings: dict[str, float] = {}
        self.written: list[Path] = []

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        logger.info("stage %s", name)
        try:
            yield
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(name, exc) from exc
        self.timings[name] = time.perf_counter() - t0

    def output(self, path) -> Path:
        p = Path(path)
        self.written.append(p)
        return p

    def discard_outputs(self):
        for p in self.written:
            try:
                p.unlink()
            except FileNotFoundError:
                pass


def run_correction(cfg: PipelineConfig) -> CorrectionRunReport:
    """Run every stage in order and write the corrected reads.

    Any failure raises :class:`PipelineError` naming the stage, after
    removing the files this run had started writing.
    """
    run = _Run()
    try:
        return _run(cfg, run)
    except BaseException:
        run.discard_outputs()
        raise


def _run(cfg: PipelineConfig, run: _Run) -> CorrectionRunReport:
    inter = Path(cfg.intermediates_dir) if cfg.intermediates_dir is not None else None

    with run.stage("read"):
        reads = list(read_sequences(cfg.reads_path))
        if not reads:
            raise ValueError(f"no reads in {cfg.reads_path}")
        if inter is not None:
            inter.mkdir(parents=True, exist_ok=True)

    fallback = False
    with run.stage("choose_k"):
        if cfg.k == "auto":
            ksel = choose_k(reads, cfg.k_ladder, cfg.cleaning.unitig_threshold, cfg.threads)
            k, fallback = ksel.chosen_k, ksel.fallback
            if inter is not None:
                (run.output(inter / "k_selection.tsv")).write_text(ksel.to_tsv())
        else:
            k = int(cfg.k)

    with run.stage("count"):
        counts = count_kmers(reads, k)
        n_distinct = len(counts)
        if inter is not None:
            save_count_table(counts, run.output(inter / "counts.kct"))

    with run.stage("solid"):
        solid = filter_solid(counts, cfg.solidity_threshold)

    with run.stage("build"):
        raw = build_graph(solid, counts, k)
        if inter is not None:
            write_gfa(raw, run.output(inter / "graph_raw.gfa"))
    del counts

    rounds: list = []
    with run.stage("clean"):
        cleaning = cfg.cleaning
        if cfg.infer_unitig_threshold:
            cleaning = replace(cleaning, unitig_threshold=max(
                float(cfg.solidity_threshold), infer_unitig_threshold(raw, cleaning.unitig_threshold)))
        graph = clean_graph(raw, cleaning, rounds)
        if inter is not None:
            write_gfa(graph, run.output(inter / "graph_clean.gfa"))
        if cfg.gfa_path is not None:
            write_gfa(graph, run.output(cfg.gfa_path))

    with run.stage("index"):
        index = build_seed_index(graph, cfg.mapper)

    stats = MappingStats()
    with run.stage("correct"):
        def corrected():
            for r, aln in map_reads(reads, graph, index, cfg.mapper, cfg.threads):
                stats.add(r, aln)
                yield apply_alignment(r, aln, cfg.tag_status)
        write_sequences(corrected(), run.output(cfg.out_path), format_for_path(cfg.out_path))

    by = stats.by_status
    report = CorrectionRunReport(
        chosen_k=k, k_fallback=fallback, reads_total=stats.total,
        distinct_kmers=n_distinct,
        solid_kmers=len(solid), unitigs_before=len(raw), unitigs_after=len(graph),
        kmers_after=graph.n_kmers(), cleaning_rounds=len(rounds),
        unitig_threshold=float(cleaning.unitig_threshold),
        seed_positions=index.n_positions(), corrected_bases=stats.corrected_bases,
        reads_mapped=by["mapped"], reads_unmapped_no_seed=by["unmapped_no_seed"],
        reads_unmapped_over_budget=by["unmapped_over_budget"],
        reads_unmapped_ambiguous=by["unmapped_ambiguous"],
        timings=run.timings)
    if cfg.report_path is not None:
        report.write_json(run.output(cfg.report_path))
    return report
