"""A 10 bp repeat sits in two contexts; a read ends just past it with an error.

With k=5 the graph merges both copies, so the last base has two equally good
fixes and the read is left alone. With k=13 each copy keeps its context and
the read is corrected.
"""
from dbgcorrect import MapperConfig, ReadRecord, align_read, build_graph, build_seed_index
from dbgcorrect.kmers import canonical

p1, s1 = "GATCCTTAGCAAGTG", "CTTGAGCCAATTCGA"
p2, s2 = "TACGGAACTGGTTCA", "AGCATTGGACCTATC"
repeat = "CGCATTAGGT"
genome = p1 + repeat + s1 + p2 + repeat + s2
read = p1[-8:] + repeat + "G"  # true next base is s1[0] = "C"

for k in (5, 13):
    solid = {canonical(genome[i:i + k]) for i in range(len(genome) - k + 1)}
    graph = build_graph(solid, {x: 1 for x in solid}, k)
    cfg = MapperConfig()
    aln = align_read(ReadRecord("read", read), graph, build_seed_index(graph, cfg), cfg)
    print(f"k={k:2d}: {len(graph):2d} unitigs, read {aln.status.value}", end="")
    if aln.mapped:
        print(f", corrected to {aln.corrected_sequence} ({aln.mismatches} change)")
    else:
        print()
