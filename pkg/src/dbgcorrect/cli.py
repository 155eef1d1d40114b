"""Command-line entry point: ``dbgcorrect <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .cdbg import build_graph, graph_from_gfa, reweigh
from .clean import CleaningConfig, clean_graph, infer_unitig_threshold
from .evaluate import evaluate, evaluate_graph_strategies, write_strategy_table
from .kmers import (count_kmers, filter_solid, load_count_table, save_count_table, spectrum,
                    write_spectrum_tsv)
from .ksel import choose_k
from .mapper import MapperConfig, build_seed_index, map_reads, write_alignments_tsv
from .pipeline import PipelineConfig, PipelineError, run_correction
from .seqio import ReadRecord, read_sequences, write_gfa, write_sequences
from .simulate import SimulationSpec, random_genome, simulate_reads

logger = logging.getLogger("dbgcorrect")


def _k_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"k must be an odd integer or 'auto', got {text!r}")


def _threshold_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}")


def _ladder_arg(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _mapper_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-mismatches", type=int, default=10)
    p.add_argument("--seed-size", type=int, default=None,
                   help="seed length (default min(31, k))")
    p.add_argument("--stride", type=int, default=1,
                   help="index one seed position in every STRIDE (default 1)")
    p.add_argument("--ambiguity", choices=("reject", "pick"), default="reject",
                   help="unmapped on ties, or keep the smallest optimal spelling")


def _mapper_cfg(a) -> MapperConfig:
    return MapperConfig(max_mismatches=a.max_mismatches, seed_length=a.seed_size,
                        stride=a.stride,
                        ambiguity_policy="pick_deterministic" if a.ambiguity == "pick" else "reject")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dbgcorrect",
                                 description="Short-read error correction by alignment "
                                             "to a cleaned compacted de Bruijn graph.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate reads with substitution errors")
    p.add_argument("--genome", required=True, help="random:SIZE or a FASTA file")
    p.add_argument("--coverage", type=float, required=True)
    p.add_argument("--read-len", type=int, required=True)
    p.add_argument("--error-rate", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--genome-out", help="also write the genome (useful with random:SIZE)")

    p = sub.add_parser("choose-k", help="pick k from read k-mer spectra")
    p.add_argument("--in", dest="reads", required=True)
    p.add_argument("--ladder", type=_ladder_arg, default=None, help="comma-separated k values")
    p.add_argument("--unitig-threshold", type=float, default=5)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--spectrum-dir", help="write one spectrum TSV per k here")

    p = sub.add_parser("build-graph", help="count k-mers and build the compacted graph")
    p.add_argument("--in", dest="reads", required=True)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--solidity", type=int, default=2)
    p.add_argument("--gfa", required=True)
    p.add_argument("--counts", help="write the k-mer count table here")
    p.add_argument("--spectrum", help="write the abundance spectrum TSV here")

    p = sub.add_parser("clean-graph", help="remove tips and low-abundance unitigs")
    p.add_argument("--gfa", required=True, help="input graph")
    p.add_argument("--out", required=True, help="output graph")
    p.add_argument("--counts", help="count table; re-derives unitig abundances from it")
    p.add_argument("--unitig-threshold", type=_threshold_arg, default=5.0)
    p.add_argument("--max-rounds", type=int, default=5)
    p.add_argument("--no-tips", action="store_true")
    p.add_argument("--no-unitig-filter", action="store_true")

    p = sub.add_parser("map", help="align reads to a graph and report paths")
    p.add_argument("--in", dest="reads", required=True)
    p.add_argument("--gfa", required=True)
    p.add_argument("--out", required=True, help="TSV of read_id, status, mismatches, path")
    p.add_argument("--threads", type=int, default=1)
    _mapper_args(p)

    p = sub.add_parser("correct", help="run the whole correction pipeline")
    p.add_argument("--in", dest="reads", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("-k", type=_k_arg, default="auto")
    p.add_argument("--ladder", type=_ladder_arg, default=None)
    p.add_argument("--solidity", type=int, default=2)
    p.add_argument("--unitig-threshold", type=_threshold_arg, default=5.0)
    p.add_argument("--max-rounds", type=int, default=5)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--gfa")
    p.add_argument("--report")
    p.add_argument("--keep-intermediates", metavar="DIR")
    p.add_argument("--tag-status", action="store_true",
                   help="append the mapping status to each read id")
    _mapper_args(p)

    p = sub.add_parser("evaluate", help="per-base metrics against the truth reads")
    p.add_argument("--original", required=True)
    p.add_argument("--corrected", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--report")

    p = sub.add_parser("ablate", help="graph k-mer errors per cleaning strategy")
    p.add_argument("--genome", required=True)
    p.add_argument("--in", dest="reads", required=True)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--solidity", type=_ladder_arg, default=[2, 3],
                   help="comma-separated solidity thresholds")
    p.add_argument("--unitig-threshold", type=float, default=5)
    p.add_argument("--max-rounds", type=int, default=5)
    p.add_argument("--out", required=True)
    return ap


def _load_genome(spec: str, seed: int) -> str:
    if spec.startswith("random:"):
        return random_genome(int(spec.split(":", 1)[1]), seed)
    return "".join(r.sequence for r in read_sequences(spec))


def cmd_simulate(a) -> int:
    genome = _load_genome(a.genome, a.seed)
    reads, truth = simulate_reads(SimulationSpec(genome, a.coverage, a.read_len,
                                                 a.error_rate, a.seed))
    write_sequences(reads, a.out, "fasta")
    write_sequences(truth, a.truth, "fasta")
    if a.genome_out:
        write_sequences([ReadRecord("genome", genome)], a.genome_out, "fasta")
    print(f"{len(reads)} reads", file=sys.stderr)
    return 0


def cmd_choose_k(a) -> int:
    rep = choose_k(read_sequences(a.reads), a.ladder, a.unitig_threshold, a.threads)
    if a.spectrum_dir:
        Path(a.spectrum_dir).mkdir(parents=True, exist_ok=True)
        for k, spec in rep.spectra.items():
            write_spectrum_tsv(spec, Path(a.spectrum_dir) / f"spectrum_k{k}.tsv")
    sys.stdout.write(rep.to_tsv())
    return 0


def cmd_build_graph(a) -> int:
    counts = count_kmers(read_sequences(a.reads), a.k)
    if a.counts:
        save_count_table(counts, a.counts)
    if a.spectrum:
        write_spectrum_tsv(spectrum(counts), a.spectrum)
    graph = build_graph(filter_solid(counts, a.solidity), counts, a.k)
    write_gfa(graph, a.gfa)
    print(f"{len(graph)} unitigs, {graph.n_kmers()} k-mers", file=sys.stderr)
    return 0


def cmd_clean_graph(a) -> int:
    graph = graph_from_gfa(a.gfa)
    if a.counts:
        graph = reweigh(graph, load_count_table(a.counts))
    threshold = a.unitig_threshold
    if threshold == "auto":
        threshold = infer_unitig_threshold(graph)
    cfg = CleaningConfig(unitig_threshold=threshold, max_rounds=a.max_rounds,
                         tip_removal=not a.no_tips, unitig_filter=not a.no_unitig_filter)
    rounds: list = []
    cleaned = clean_graph(graph, cfg, rounds)
    write_gfa(cleaned, a.out)
    for r in rounds:
        print(f"round {r.round}: -{r.tips_removed} tips, -{r.low_abundance_removed} "
              f"low-abundance, {r.unitigs_after} unitigs left", file=sys.stderr)
    return 0


def cmd_map(a) -> int:
    graph = graph_from_gfa(a.gfa)
    cfg = _mapper_cfg(a)
    index = build_seed_index(graph, cfg)
    stats = write_alignments_tsv(map_reads(read_sequences(a.reads), graph, index, cfg, a.threads),
                                 a.out)
    print(json.dumps(stats.as_dict()), file=sys.stderr)
    return 0


def cmd_correct(a) -> int:
    auto = a.unitig_threshold == "auto"
    cleaning = CleaningConfig(unitig_threshold=5.0 if auto else a.unitig_threshold,
                              max_rounds=a.max_rounds)
    cfg = PipelineConfig(reads_path=a.reads, out_path=a.out, k=a.k,
                         solidity_threshold=a.solidity, cleaning=cleaning,
                         infer_unitig_threshold=auto, mapper=_mapper_cfg(a),
                         threads=a.threads, k_ladder=a.ladder, gfa_path=a.gfa,
                         report_path=a.report, intermediates_dir=a.keep_intermediates,
                         tag_status=a.tag_status)
    report = run_correction(cfg)
    if a.report is None:
        print(json.dumps(report.as_dict(), indent=2, sort_keys=True), file=sys.stderr)
    return 0


def cmd_evaluate(a) -> int:
    m = evaluate(read_sequences(a.original), read_sequences(a.corrected),
                 read_sequences(a.truth))
    text = json.dumps(m.as_dict(), indent=2, sort_keys=True)
    if a.report:
        Path(a.report).write_text(text + "\n")
    print(text)
    return 0


def cmd_ablate(a) -> int:
    genome = "".join(r.sequence for r in read_sequences(a.genome))
    results = evaluate_graph_strategies(genome, list(read_sequences(a.reads)), a.k,
                                        a.solidity, unitig_threshold=a.unitig_threshold,
                                        max_rounds=a.max_rounds)
    write_strategy_table(results, a.out)
    sys.stdout.write(Path(a.out).read_text())
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "choose-k": cmd_choose_k,
    "build-graph": cmd_build_graph,
    "clean-graph": cmd_clean_graph,
    "map": cmd_map,
    "correct": cmd_correct,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
}


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(a.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[a.command](a)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
