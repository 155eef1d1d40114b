"""Reads from a random genome produce a two-peaked k-mer spectrum.

Erroneous k-mers pile up at abundance 1-3, genomic ones near the k-mer
coverage. The gap between the two peaks is what picks k.
"""
from dbgcorrect import SimulationSpec, choose_k, count_kmers, random_genome, simulate_reads, spectrum

genome = random_genome(60_000, 1)
reads, _ = simulate_reads(SimulationSpec(genome, 40, 150, 0.01, 2))
print(f"{len(reads)} reads of 150 bp over a {len(genome)} bp genome")

hist = spectrum(count_kmers(reads, 31)).dense()
print("\nabundance  k-mers (k=31)")
for a in range(1, 45):
    bar = "#" * min(60, int(hist[a]) // 400) if a < len(hist) else ""
    print(f"{a:9d}  {int(hist[a]) if a < len(hist) else 0:7d} {bar}")

report = choose_k(reads, [21, 31, 41, 51], unitig_threshold=5)
print("\nvalley per k (first local minimum of each spectrum):")
print(report.to_tsv())
