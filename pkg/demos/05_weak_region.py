"""One substitution in a read turns exactly k of its k-mers into non-genomic ones."""

from dbgcorrect import count_kmers, random_genome

k = 31
genome = random_genome(10_000, 8)
genomic = count_kmers([genome], k)

read = list(genome[2000:2150])
p = 75
read[p] = "A" if read[p] != "A" else "C"
read = "".join(read)

hits = genomic.lookup([read[i:i + k] for i in range(len(read) - k + 1)])
print("".join("." if h else "x" for h in hits.tolist()))
absent = [i for i, h in enumerate(hits.tolist()) if not h]
print(f"error at {p}: {len(absent)} absent k-mers, starts {absent[0]}..{absent[-1]}")
