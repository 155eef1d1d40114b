"""Short-read error correction by aligning reads to a cleaned compacted de Bruijn graph."""

from .cdbg import CompactedDbg, GraphError, Unitig, build_graph, graph_from_gfa, remove_unitigs
from .clean import CleaningConfig, clean_graph
from .evaluate import CorrectionMetrics, evaluate, evaluate_graph_strategies
from .kmers import KmerCountTable, count_kmers, filter_solid, spectrum
from .ksel import choose_k
from .mapper import AlignmentStatus, GraphAlignment, MapperConfig, align_read, build_seed_index
from .pipeline import PipelineConfig, run_correction
from .seqio import ReadRecord, read_gfa, read_sequences, write_gfa, write_sequences
from .simulate import SimulationSpec, random_genome, simulate_reads

__version__ = "0.1.0"

__all__ = [
    "AlignmentStatus", "CleaningConfig", "CompactedDbg", "CorrectionMetrics", "GraphAlignment",
    "GraphError", "KmerCountTable", "MapperConfig", "PipelineConfig", "ReadRecord",
    "SimulationSpec", "Unitig", "align_read", "build_graph", "build_seed_index", "choose_k",
    "clean_graph", "count_kmers", "evaluate", "evaluate_graph_strategies", "filter_solid",
    "graph_from_gfa", "random_genome", "read_gfa", "read_sequences", "remove_unitigs",
    "run_correction", "simulate_reads", "spectrum", "write_gfa", "write_sequences",
]
