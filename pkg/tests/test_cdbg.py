import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from dbgcorrect.cdbg import (GraphError, build_graph, graph_from_gfa, graph_kmer_audit, remove_unitigs,
                             reweigh, unitig_abundance)
from dbgcorrect.kmers import count_kmers
from dbgcorrect.seqio import write_gfa
from instances import random_dna, random_solid_set
from oracles import canon, kmers_of, maximal_paths, rc


def kmers_from(seqs, k):
    return {canon(s[i:i + k]) for s in seqs for i in range(len(s) - k + 1)}


def same_unitigs(graph, solid, k):
    """Compare a built graph to the brute-force enumeration, up to reverse complement.

    Paths are compared by canonical spelling; cycles (whose start point is a
    convention) by their k-mer sets.
    """
    expected = maximal_paths(solid, k)
    paths = Counter(canon(s) for s, cyc in expected if not cyc)
    cycles = Counter(frozenset(kmers_of(s, k)) for s, cyc in expected if cyc)
    got_paths, got_cycles = Counter(), Counter()
    for u in graph.unitigs:
        c = canon(u.sequence)
        if c in paths:
            got_paths[c] += 1
        else:
            got_cycles[frozenset(kmers_of(u.sequence, k))] += 1
    return got_paths == paths and got_cycles == cycles


def test_short_palindromic_string_matches_oracle():
    # ACG/CGT and GTA/TAC are reverse-complement pairs: the only gluable edge
    # is CGT->GTA, so the whole k-mer set is one unitig spelled CGTA
    k = 3
    solid = kmers_from(["ACGTAC"], k)
    g = build_graph(solid, {x: 1 for x in solid}, k)
    assert [u.sequence for u in g.unitigs] == ["CGTA"]
    assert set(kmers_of("CGTA", k)) == solid
    assert same_unitigs(g, solid, k)


def test_linear_string_is_one_unitig():
    k = 15
    seq = "GATTACAGTTGCCAGTAACGGTCATCCGA"
    solid = kmers_from([seq], k)
    g = build_graph(solid, {x: 1 for x in solid}, k)
    assert [u.sequence for u in g.unitigs] == [canon(seq)]
    assert g.edges() == []


def test_snp_bubble_has_four_unitigs_and_four_links():
    k = 5
    solid = kmers_from(["CAGGATTACTGAACC", "CAGGATTGCTGAACC"], k)
    g = build_graph(solid, {x: 2 for x in solid}, k)
    assert len(g) == 4 and len(g.edges()) == 4
    assert same_unitigs(g, solid, k)
    g.validate()


def test_isolated_kmer():
    g = build_graph({"ACGTTGA"}, {"ACGTTGA": 7}, 7)
    assert len(g) == 1 and g.unitigs[0].sequence == "ACGTTGA"
    assert g.degree(0) == (0, 0)
    assert g.unitigs[0].mean_abundance == 7


def test_means_and_sums():
    k = 5
    seq = "GATTACAGTTGC"
    solid = kmers_from([seq], k)
    counts = {x: i + 1 for i, x in enumerate(sorted(solid))}
    g = build_graph(solid, counts, k)
    (u,) = g.unitigs
    assert u.count_sum == sum(counts.values())
    assert u.mean_abundance == pytest.approx(sum(counts.values()) / len(solid))
    assert unitig_abundance(u, counts) == pytest.approx(u.mean_abundance)


def test_unitig_abundance_examples():
    g = build_graph({"ACGTTGA"}, {"ACGTTGA": 7}, 7)
    assert unitig_abundance(g.unitigs[0], {"ACGTTGA": 7}) == 7
    k = 5
    solid = kmers_from(["GATTAC"], k)
    a, b = sorted(solid)
    g = build_graph(solid, {a: 4, b: 6}, k)
    assert unitig_abundance(g.unitigs[0], {a: 4, b: 6}) == 5
    with pytest.raises(GraphError):
        unitig_abundance(g.unitigs[0], {a: 4})


def test_errors():
    with pytest.raises(GraphError, match="no solid k-mers"):
        build_graph(set(), {}, 5)
    with pytest.raises(GraphError):
        build_graph({"ACGTA"}, {}, 5)
    with pytest.raises(ValueError):
        build_graph({"ACGT"}, {"ACGT": 1}, 4)


def test_self_loop_and_hairpin_are_kept_unmerged():
    # AAAAA links to itself; a palindromic join links a unitig to its own reverse complement
    g = build_graph({"AAAAA"}, {"AAAAA": 3}, 5)
    assert len(g) == 1 and g.links[0] == (0,)
    half = "GATTC"
    k = 5
    solid = kmers_from([half + rc(half)], k)
    g = build_graph(solid, {x: 1 for x in solid}, k)
    g.validate()
    assert same_unitigs(g, solid, k)


def test_isolated_cycle_opens_at_smallest_kmer():
    k = 5
    unit = "GATTACAGGC"
    solid = kmers_from([unit + unit[:k - 1]], k)
    g = build_graph(solid, {x: 1 for x in solid}, k)
    (u,) = g.unitigs
    assert u.sequence[:k] == min(solid)
    assert set(kmers_of(u.sequence, k)) == solid
    assert g.links[0] == (0,)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9), st.sampled_from([3, 5, 7, 9, 31]))
def test_conservation_maximality_and_oracle(seed, k):
    rng = random.Random(seed)
    solid = random_solid_set(rng, k, max_kmers=800)
    g = build_graph(solid, {x: 1 for x in solid}, k)
    # each solid k-mer appears exactly once across unitigs
    assert Counter(g.kmers()) == Counter(solid)
    g.validate()
    assert same_unitigs(g, solid, k)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**9))
def test_independent_of_input_order(seed):
    rng = random.Random(seed)
    k = 7
    solid = list(random_solid_set(rng, k, max_kmers=400))
    g1 = build_graph(solid, {x: 1 for x in solid}, k)
    rng.shuffle(solid)
    g2 = build_graph([rc(x) if rng.random() < 0.5 else x for x in solid], {x: 1 for x in solid}, k)
    assert [u.sequence for u in g1.unitigs] == [u.sequence for u in g2.unitigs]
    assert g1.links == g2.links


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9), st.sampled_from([5, 7, 11, 31]))
def test_removal_then_recompaction_equals_rebuild(seed, k):
    rng = random.Random(seed)
    solid = random_solid_set(rng, k, max_kmers=600)
    counts = {x: rng.randint(1, 9) for x in solid}
    g = build_graph(solid, counts, k)
    doomed = {u.id for u in g.unitigs if rng.random() < 0.3}
    if len(doomed) == len(g):
        doomed.pop()
    after = remove_unitigs(g, doomed)
    remaining = solid - {km for uid in doomed for km in kmers_of(g.unitigs[uid].sequence, k)}
    rebuilt = build_graph(remaining, counts, k)
    assert [u.sequence for u in after.unitigs] == [u.sequence for u in rebuilt.unitigs]
    assert [u.count_sum for u in after.unitigs] == [u.count_sum for u in rebuilt.unitigs]
    assert after.links == rebuilt.links


def test_reverse_complement_links_are_closed():
    rng = random.Random(4)
    solid = random_solid_set(rng, 7)
    g = build_graph(solid, {x: 1 for x in solid}, 7)
    for a, succ in enumerate(g.links):
        for b in succ:
            assert (a ^ 1) in g.links[b ^ 1]
            assert a in g.predecessors(b)


def test_gfa_round_trip_is_isomorphic(tmp_path):
    rng = random.Random(12)
    k = 9
    # grow a graph with about 50 unitigs
    genome = random_dna(rng, 600)
    seqs = [genome]
    while True:
        a = rng.randrange(len(genome) - 30)
        s = list(genome[a:a + 25])
        s[12] = rng.choice([b for b in "ACGT" if b != s[12]])
        seqs.append("".join(s))
        solid = kmers_from(seqs, k)
        g = build_graph(solid, {x: rng.randint(2, 40) for x in solid}, k)
        if len(g) >= 50:
            break
    p = tmp_path / "g.gfa"
    write_gfa(g, p)
    back = graph_from_gfa(p)
    assert back.k == k
    assert [(u.sequence, u.count_sum) for u in back.unitigs] == [(u.sequence, u.count_sum) for u in g.unitigs]
    assert back.links == g.links

    # shuffle names, flip some segments and reorder lines: same graph comes back
    names = list(range(len(g)))
    rng.shuffle(names)
    flip = {u.id: rng.random() < 0.5 for u in g.unitigs}
    lines = [f"H\tKL:i:{k}"]
    for u in g.unitigs:
        s = rc(u.sequence) if flip[u.id] else u.sequence
        lines.append(f"S\tu{names[u.id]}\t{s}\tKC:i:{u.count_sum}")
    for a, b in g.edges():
        def orient(n):
            return "-" if (n & 1) ^ flip[n >> 1] else "+"
        lines.append(f"L\tu{names[a >> 1]}\t{orient(a)}\tu{names[b >> 1]}\t{orient(b)}\t{k - 1}M")
    rng.shuffle(lines)
    q = tmp_path / "h.gfa"
    q.write_text("\n".join(lines) + "\n")
    again = graph_from_gfa(q)
    assert [u.sequence for u in again.unitigs] == [u.sequence for u in g.unitigs]
    assert again.links == g.links
    again.validate()


def test_gfa_without_header_infers_k_from_overlap(tmp_path):
    p = tmp_path / "g.gfa"
    p.write_text("S\ta\tACGTTGA\nS\tb\tTTGAGGC\nL\ta\t+\tb\t+\t4M\n")
    g = graph_from_gfa(p)
    assert g.k == 5
    p.write_text("S\ta\tACGTTGA\n")
    with pytest.raises(GraphError):
        graph_from_gfa(p)


def test_reweigh_restores_exact_sums(tmp_path):
    reads = ["GATTACAGTTGCCAGTAAC", "GATTACAGTTGCCAG", "TTGCCAGTAAC"]
    counts = count_kmers(reads, 5)
    solid = set(counts.kmers())
    g = build_graph(solid, counts, 5)
    p = tmp_path / "g.gfa"
    p.write_text("".join(f"S\t{u.id}\t{u.sequence}\n" for u in g.unitigs))
    bare = graph_from_gfa(p, k=5)
    assert all(u.count_sum == 0 for u in bare.unitigs)
    fixed = reweigh(bare, counts)
    assert [u.count_sum for u in fixed.unitigs] == [u.count_sum for u in g.unitigs]


def test_audit():
    rng = random.Random(0)
    genome = random_dna(rng, 300)
    k = 11
    solid = kmers_from([genome], k)
    g = build_graph(solid, {x: 1 for x in solid}, k)
    assert graph_kmer_audit(g, genome) == (0, 0)
    dropped = sorted(solid)[0]
    g2 = build_graph(solid - {dropped}, {x: 1 for x in solid}, k)
    assert graph_kmer_audit(g2, genome) == (0, 1)
    extra = canon(random_dna(rng, k))
    g3 = build_graph(solid | {extra}, {x: 1 for x in solid | {extra}}, k)
    assert graph_kmer_audit(g3, genome) == (1, 0)
