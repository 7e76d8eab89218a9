from __future__ import annotations

import json

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from genlattice.embedding import ContextEmbedder, HashedTrigramEmbedder
from genlattice.lattice import (
    LatticeBuilder,
    build_chains,
    build_lattice,
    collapse_chains,
    from_json,
    merge_similar,
    reconstruct_generation,
    stats,
    to_dot,
    to_json,
)
from genlattice.segmentation import segment

from .conftest import synthetic_corpus
from .oracles import (
    assert_witnessed_dag,
    engine_partition,
    oracle_merge_partition,
    oracle_stats_from_export,
)

PARAPHRASES = [
    "the dragon guards a hoard of gold",
    "the dragon guards a pile of gold",
    "a dragon protects the gold hoard",
    "the wyvern guards a hoard of gold",
    "the dragon watches a hoard of coins",
]


def make_seqs(texts, mode="space", prefix="g"):
    return [segment(t, mode, f"{prefix}{i}") for i, t in enumerate(texts)]


def embedder():
    return ContextEmbedder(HashedTrigramEmbedder())


def assert_faithful(lattice):
    """Every generation's traversal reconstructs its text exactly and the
    adjacency graph is an acyclic, path-witnessed DAG."""
    assert lattice.seqs is not None
    originals = {s.generation_id: s for s in lattice.seqs}
    for gen in lattice.gen_order:
        expected = "".join(t.surface + t.trailing_separator
                           for t in originals[gen].tokens)
        assert reconstruct_generation(lattice, gen) == expected
    graph = nx.DiGraph()
    graph.add_nodes_from(lattice.nodes)
    graph.add_edges_from(lattice.adjacency())
    assert nx.is_directed_acyclic_graph(graph)


# ---- chains -----------------------------------------------------------------

def test_single_generation_chain():
    lat = build_chains(make_seqs(["a b c"]))
    assert len(lat.nodes) == 3
    assert sum(1 for _ in lat.traversal_edges()) == 2


def test_two_generations_parallel_chains():
    lat = build_chains(make_seqs(["a b c", "a b c"]))
    assert len(lat.nodes) == 6
    assert sum(1 for _ in lat.traversal_edges()) == 4
    assert_faithful(lat)


def test_empty_corpus():
    lat = build_chains([])
    assert lat.nodes == {}
    assert stats(lat).node_count == 0


def test_empty_generation_is_kept():
    lat = build_chains(make_seqs(["a b", ""]))
    assert lat.paths["g1"] == ()
    assert reconstruct_generation(lat, "g1") == ""


def test_duplicate_generation_ids_rejected():
    seqs = [segment("a", "space", "g"), segment("b", "space", "g")]
    with pytest.raises(ValueError):
        build_chains(seqs)


# ---- merging ------------------------------------------------------------------

def test_identical_tokens_merge_and_dissimilar_finals_branch():
    seqs = make_seqs(["a b hippopotamus", "a b xylophone"])
    merged = merge_similar(build_chains(seqs), 0.5, embedder=embedder())
    assert len(merged.nodes) == 4  # a, b shared; two distinct finals
    labels = {merged.nodes[n].label for n in merged.node_order}
    assert labels == {"a", "b", "hippopotamus", "xylophone"}
    assert_faithful(merged)


def test_cycle_rejected_for_swapped_words():
    seqs = make_seqs(["x y", "y x"])
    merged = merge_similar(build_chains(seqs), 0.5, embedder=embedder())
    assert len(merged.nodes) == 3  # x merged; merging y would close a cycle
    assert_faithful(merged)


def test_threshold_above_one_merges_nothing():
    seqs = make_seqs(["x y", "y x"])
    chains = build_chains(seqs)
    merged = merge_similar(chains, 1.01, embedder=embedder())
    assert len(merged.nodes) == len(chains.nodes)


def test_paraphrase_fixture_matches_frozen_golden():
    # frozen from the brute-force scalar oracle (greedy rule applied by hand)
    seqs = make_seqs(PARAPHRASES, prefix="p")
    merged = merge_similar(build_chains(seqs), 0.5, embedder=embedder())
    assert len(merged.nodes) == 12
    assert engine_partition(merged) == oracle_merge_partition(
        seqs, 0.5, HashedTrigramEmbedder())
    assert_faithful(merged)


def test_merge_matches_oracle_on_random_corpora():
    provider = HashedTrigramEmbedder()
    for seed, threshold in [(3, 0.5), (4, 0.3), (5, 0.7), (6, 0.5), (7, 0.5)]:
        corpus = synthetic_corpus(seed=seed, n_generations=6, n_templates=3,
                                  lexicon_size=6, id_prefix=f"s{seed}")
        seqs = [segment(g.text, "space", g.id) for g in corpus]
        merged = merge_similar(build_chains(seqs), threshold,
                               embedder=embedder())
        assert engine_partition(merged) == oracle_merge_partition(
            seqs, threshold, provider), f"seed={seed} t={threshold}"
        assert_faithful(merged)


class _InjectedScorer:
    """Feeds merge_similar an arbitrary pre-sorted candidate stream."""

    def __init__(self, pairs):
        import numpy as np

        self._a = np.asarray([a for a, _ in pairs], dtype=np.int64)
        self._b = np.asarray([b for _, b in pairs], dtype=np.int64)
        self._s = np.linspace(1.0, 0.5, num=max(len(pairs), 1))[: len(pairs)]

    def candidates(self, threshold):
        return self._s, self._a, self._b


def test_cycle_rejection_matches_networkx_on_random_pair_streams():
    # stresses the incremental topological order with pair patterns that the
    # score-based enumeration would never produce (arbitrary distances/order)
    import random as _random

    rng = _random.Random(4242)
    for _ in range(25):
        n_gens = rng.randint(2, 5)
        seqs = make_seqs([
            " ".join(rng.choice("abcdefg") for _ in range(rng.randint(1, 8)))
            for _ in range(n_gens)
        ])
        chains = build_chains(seqs)
        n = sum(len(s) for s in seqs)
        if n < 2:
            continue
        pairs = []
        for _ in range(rng.randint(5, 40)):
            a, b = rng.sample(range(n), 2)
            pairs.append((min(a, b), max(a, b)))
        merged = merge_similar(chains, 0.0, scorer=_InjectedScorer(pairs))

        # naive reference: same greedy stream, networkx reachability
        occs = [(s.generation_id, t.index) for s in seqs for t in s.tokens]
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        graph = nx.DiGraph()
        graph.add_nodes_from(range(n))
        k = 0
        for s in seqs:
            for step in range(len(s.tokens) - 1):
                graph.add_edge(k + step, k + step + 1)
            k += len(s.tokens)
        for a, b in pairs:
            ra, rb = find(a), find(b)
            if ra == rb:
                continue
            if nx.has_path(graph, ra, rb) or nx.has_path(graph, rb, ra):
                continue
            graph = nx.contracted_nodes(graph, ra, rb, self_loops=False)
            parent[rb] = ra
        expected = {}
        for i, occ in enumerate(occs):
            expected.setdefault(find(i), set()).add(occ)
        assert engine_partition(merged) == {frozenset(v)
                                            for v in expected.values()}


def test_merge_rejects_non_finite_threshold():
    seqs = make_seqs(["a b"])
    with pytest.raises(ValueError):
        merge_similar(build_chains(seqs), float("nan"), embedder=embedder())


def test_empty_corpus_full_pipeline():
    lat = build_lattice([], threshold=0.5, embedder=embedder())
    assert lat.nodes == {}
    assert stats(lat).node_count == 0


def test_builder_score_floor_matches_direct_build():
    seqs = make_seqs(PARAPHRASES, prefix="p")
    floored = LatticeBuilder(seqs, "space", embedder(), score_floor=0.0)
    direct = LatticeBuilder(seqs, "space", embedder())
    for t in (0.2, 0.5, 0.8):
        assert floored.build(t).node_order == direct.build(t).node_order


def test_merge_is_total_on_adversarial_inputs():
    cases = [
        ["the the the", "the the"],
        ["a", "a", "a"],
        ["", "x", ""],
        ["one"],
    ]
    for texts in cases:
        merged = merge_similar(build_chains(make_seqs(texts)), 0.5,
                               embedder=embedder())
        assert_faithful(merged)


def test_remerging_at_lower_threshold_equals_direct():
    seqs = make_seqs(PARAPHRASES, prefix="p")
    emb = embedder()
    high = merge_similar(build_chains(seqs), 0.8, embedder=emb)
    lowered = merge_similar(high, 0.5, embedder=emb)
    direct = merge_similar(build_chains(seqs), 0.5, embedder=emb)
    assert engine_partition(lowered) == engine_partition(direct)


def test_merge_requires_uncollapsed_nodes():
    seqs = make_seqs(["a b c d"])
    collapsed = collapse_chains(build_chains(seqs))
    with pytest.raises(ValueError):
        merge_similar(collapsed, 0.5, embedder=embedder())


# ---- collapsing ---------------------------------------------------------------

def test_unbranched_chain_collapses_to_one_node():
    lat = collapse_chains(build_chains(make_seqs(["a b c"])))
    assert len(lat.nodes) == 1
    node = lat.nodes[lat.node_order[0]]
    assert node.label == "a b c"
    assert_faithful(lat)


def test_branch_blocks_collapse():
    seqs = make_seqs(["a hippopotamus", "a xylophone"])
    merged = merge_similar(build_chains(seqs), 0.5, embedder=embedder())
    lat = collapse_chains(merged)
    # "a" has two children: it must stay its own node
    labels = sorted(lat.nodes[n].label for n in lat.node_order)
    assert labels == ["a", "hippopotamus", "xylophone"]


def test_join_blocks_collapse():
    # two chains converge on a shared final token: in-degree 2 set by merge
    seqs = make_seqs(["hippopotamus swims z", "xylophone sings z"])
    merged = merge_similar(build_chains(seqs), 0.5, embedder=embedder())
    z_nodes = [n for n in merged.node_order if merged.nodes[n].label == "z"]
    assert len(z_nodes) == 1
    lat = collapse_chains(merged)
    z_node = next(lat.nodes[n] for n in lat.node_order
                  if lat.nodes[n].label == "z")
    assert z_node.frequency == 2
    assert any(lat.nodes[n].label == "hippopotamus swims"
               for n in lat.node_order)
    assert_faithful(lat)


def test_collapse_preserves_separators_in_labels():
    lat = collapse_chains(build_chains([segment("a  b\tc", "space", "g0")]))
    assert lat.nodes[lat.node_order[0]].label == "a  b\tc"


def test_traversal_end_blocks_collapse():
    # g1 stops at "b": absorbing "c" into "b" would misstate g1's path
    seqs = make_seqs(["a b c", "a b"])
    merged = merge_similar(build_chains(seqs), 0.5, embedder=embedder())
    lat = collapse_chains(merged)
    for gen in lat.gen_order:
        assert reconstruct_generation(lat, gen) == {
            "g0": "a b c", "g1": "a b"}[gen]


# ---- stats ----------------------------------------------------------------------

def test_stats_identical_generations():
    texts = ["the dragon sleeps"] * 10  # k = 3 tokens
    lat = build_lattice(make_seqs(texts), threshold=0.5, embedder=embedder())
    s = stats(lat)
    assert s.node_count == 1
    assert s.compression_ratio == pytest.approx(1 / 30)
    assert s.distinct_path_count == 1


def test_stats_disjoint_vocabularies():
    texts = [
        "apple banana cherry", "dog elephant fox", "guitar harp island",
        "jacket kitten lemon", "mountain needle ocean", "piano quartz rocket",
        "sunset tiger umbrella", "violin walnut xenon", "yard zeppelin acorn",
        "breeze canyon dune",
    ]
    merged = merge_similar(build_chains(make_seqs(texts)), 0.5,
                           embedder=embedder())
    s = stats(merged)
    assert s.compression_ratio == pytest.approx(1.0)
    assert s.distinct_path_count == 10


def test_stats_mixed_fixture_golden():
    # frozen from the path-enumeration oracle over the export
    seqs = make_seqs(PARAPHRASES, prefix="p")
    merged = merge_similar(build_chains(seqs), 0.5, embedder=embedder())
    s = stats(merged)
    assert (s.node_count, s.traversal_edge_count, s.distinct_path_count) == (12, 29, 3)
    assert s.compression_ratio == pytest.approx(12 / 34)
    ref = oracle_stats_from_export(to_json(merged))
    assert ref["node_count"] == s.node_count
    assert ref["distinct_path_count"] == s.distinct_path_count
    assert ref["compression_ratio"] == pytest.approx(s.compression_ratio)
    collapsed = collapse_chains(merged)
    assert stats(collapsed).node_count == 9
    assert stats(collapsed).distinct_path_count == 3


def test_stats_empty_lattice():
    s = stats(build_chains([]))
    assert s.node_count == 0
    assert s.compression_ratio == 1.0


# ---- rebuild / threshold sweeps ---------------------------------------------------

def test_rebuild_same_threshold_is_identical():
    seqs = make_seqs(PARAPHRASES, prefix="p")
    builder = LatticeBuilder(seqs, "space", embedder())
    a = builder.build(0.5)
    b = builder.build(0.5)
    assert a.node_order == b.node_order
    assert a.paths == b.paths


def test_threshold_sweep_golden_counts():
    # frozen alongside the oracle partitions; monotone by construction
    corpus = synthetic_corpus(seed=21, n_generations=8, n_templates=4,
                              lexicon_size=8, id_prefix="fix")
    seqs = [segment(g.text, "space", g.id) for g in corpus]
    builder = LatticeBuilder(seqs, "space", embedder())
    counts = {t: len(builder.build(t, collapse=False).nodes)
              for t in (0.2, 0.5, 0.8)}
    assert counts == {0.2: 9, 0.5: 15, 0.8: 22}


def test_lower_threshold_never_increases_nodes():
    corpus = synthetic_corpus(seed=33, n_generations=10, n_templates=5,
                              lexicon_size=10)
    seqs = [segment(g.text, "space", g.id) for g in corpus]
    builder = LatticeBuilder(seqs, "space", embedder())
    previous = None
    for t in (0.8, 0.65, 0.5, 0.35, 0.2):
        count = len(builder.build(t, collapse=False).nodes)
        if previous is not None:
            assert count <= previous
        previous = count


def test_builder_reuses_scores():
    class CountingProvider(HashedTrigramEmbedder):
        def __init__(self):
            super().__init__()
            self.batches = 0

        def embed_batch(self, texts):
            self.batches += 1
            return super().embed_batch(texts)

    provider = CountingProvider()
    seqs = make_seqs(PARAPHRASES, prefix="p")
    builder = LatticeBuilder(seqs, "space", ContextEmbedder(provider))
    builder.build(0.5)
    calls_after_first = provider.batches
    builder.build(0.8)  # higher threshold: pure prefix slice, no re-scoring
    assert provider.batches == calls_after_first


# ---- invariants on randomized corpora ----------------------------------------------

def test_pipeline_faithful_in_sentence_and_phrase_modes():
    texts = [
        "Run! Hide? Now. The gate is open, come quickly, please.",
        "Run! Hide? Later. The gate is shut, go around, please.",
        "Stay put. The gate is open, come quickly, please.",
        "",
        "One sentence only",
    ]
    for mode in ("sentence", "phrase"):
        seqs = [segment(t, mode, f"m{i}") for i, t in enumerate(texts)]
        chains = build_chains(seqs, mode)
        merged = merge_similar(chains, 0.5, embedder=embedder())
        assert_faithful(merged)
        collapsed = collapse_chains(merged)
        assert_faithful(collapsed)
        # shared full sentences/phrases merge across generations
        assert len(merged.nodes) < len(chains.nodes)


_token_text = st.text(
    alphabet=st.sampled_from("ab the.!?,é中 \t"), min_size=0, max_size=60)


@settings(max_examples=40)
@given(texts=st.lists(_token_text, min_size=1, max_size=6))
def test_pipeline_faithful_hypothesis(texts):
    seqs = [segment(t, "space", f"h{i}") for i, t in enumerate(texts)]
    lat = build_lattice(seqs, threshold=0.5, embedder=embedder())
    for seq in seqs:
        assert reconstruct_generation(lat, seq.generation_id) == \
            "".join(t.surface + t.trailing_separator for t in seq.tokens)
    graph = nx.DiGraph()
    graph.add_nodes_from(lat.nodes)
    graph.add_edges_from(lat.adjacency())
    assert nx.is_directed_acyclic_graph(graph)


def test_pipeline_faithful_on_random_corpora():
    for seed in range(8):
        corpus = synthetic_corpus(seed=100 + seed, n_generations=12,
                                  n_templates=4, lexicon_size=8)
        seqs = [segment(g.text, "space", g.id) for g in corpus]
        chains = build_chains(seqs)
        assert_faithful(chains)
        merged = merge_similar(chains, 0.5, embedder=embedder())
        assert_faithful(merged)
        collapsed = collapse_chains(merged)
        assert_faithful(collapsed)


def test_frequency_conservation():
    corpus = synthetic_corpus(seed=55, n_generations=10, n_templates=3,
                              lexicon_size=6)
    seqs = [segment(g.text, "space", g.id) for g in corpus]
    lat = build_lattice(seqs, threshold=0.5, embedder=embedder())
    per_gen: dict[str, int] = {}
    for node in lat.nodes.values():
        for gen, start, stop in node.members:
            per_gen[gen] = per_gen.get(gen, 0) + (stop - start)
    for seq in seqs:
        assert per_gen.get(seq.generation_id, 0) == len(seq)


def test_determinism_bit_identical():
    corpus = synthetic_corpus(seed=77, n_generations=8, n_templates=4,
                              lexicon_size=8)
    seqs = [segment(g.text, "space", g.id) for g in corpus]
    a = build_lattice(seqs, threshold=0.5, embedder=embedder())
    b = build_lattice(seqs, threshold=0.5, embedder=embedder())
    assert to_json(a) == to_json(b)


def test_prompt_counts_and_frequency():
    seqs = make_seqs(["z q", "z q"], prefix="g")
    prompt_of = {"g0": "pA", "g1": "pB"}
    lat = build_lattice(seqs, threshold=0.5, prompt_of=prompt_of,
                        embedder=embedder())
    node = lat.nodes[lat.node_order[0]]
    assert node.frequency == 2
    assert node.prompt_counts == {"pA": 1, "pB": 1}


# ---- export ---------------------------------------------------------------------

def test_export_round_trip():
    seqs = make_seqs(PARAPHRASES, prefix="p")
    lat = build_lattice(seqs, threshold=0.5, embedder=embedder())
    doc = to_json(lat)
    assert_witnessed_dag(doc)
    loaded = from_json(json.loads(json.dumps(doc)))
    assert loaded.node_order == lat.node_order
    assert loaded.paths == lat.paths
    assert [loaded.nodes[n].label for n in loaded.node_order] == \
           [lat.nodes[n].label for n in lat.node_order]
    assert loaded.total_tokens() == lat.total_tokens()


def test_export_rejects_unknown_version():
    with pytest.raises(ValueError):
        from_json({"version": 99})


def test_dot_export_mentions_unfaithful_paths():
    lat = build_lattice(make_seqs(["a b"]), embedder=embedder())
    dot = to_dot(lat)
    assert "paths not faithful" in dot
    assert "digraph" in dot
