"""Whole pipeline on simulated reads, scored against the error-free truth."""
import json
import tempfile
from pathlib import Path

from dbgcorrect import (PipelineConfig, SimulationSpec, evaluate, random_genome, read_sequences,
                        run_correction, simulate_reads, write_sequences)

work = Path(tempfile.mkdtemp(prefix="dbgcorrect-demo-"))
genome = random_genome(40_000, 5)
reads, truth = simulate_reads(SimulationSpec(genome, 40, 150, 0.01, 6))
write_sequences(reads, work / "reads.fq", "fastq")

report = run_correction(PipelineConfig(work / "reads.fq", work / "corrected.fq", k="auto",
                                       k_ladder=[21, 31, 41], gfa_path=work / "graph.gfa"))
print(json.dumps(report.as_dict(), indent=2))

metrics = evaluate(reads, read_sequences(work / "corrected.fq"), truth)
print(json.dumps(metrics.as_dict(), indent=2))
print(f"outputs in {work}")
