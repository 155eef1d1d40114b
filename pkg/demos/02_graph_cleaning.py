"""Build a compacted de Bruijn graph from noisy reads, then clean it.

Errors near read ends show up as short dead-end unitigs (tips); errors
elsewhere leave low-abundance bubbles. We count how many graph k-mers are
not in the genome before and after each cleaning step.
"""
from dbgcorrect import (CleaningConfig, SimulationSpec, build_graph, clean_graph, count_kmers,
                        evaluate_graph_strategies, filter_solid, random_genome, simulate_reads)

genome = random_genome(50_000, 3)
reads, _ = simulate_reads(SimulationSpec(genome, 50, 150, 0.01, 4))
k = 41

counts = count_kmers(reads, k)
raw = build_graph(filter_solid(counts, 2), counts, k)
print(f"raw graph: {len(raw)} unitigs, {raw.n_kmers()} k-mers")

rounds = []
cleaned = clean_graph(raw, CleaningConfig(unitig_threshold=5), rounds)
for r in rounds:
    print(f"  round {r.round}: {r.tips_removed} tips, {r.low_abundance_removed} weak unitigs removed")
print(f"clean graph: {len(cleaned)} unitigs, {cleaned.n_kmers()} k-mers "
      f"(genome has {len(genome) - k + 1})")

print("\nfalse / missing k-mers per strategy:")
for res in evaluate_graph_strategies(genome, reads, k, solidity_thresholds=(2, 3)):
    print(f"  solidity {res.solidity}  {res.strategy:12s} fp={res.fp:6d} fn={res.fn}")
