"""Merged token lattice over a corpus of sampled completions.

Pipeline: one linear chain per generation (``build_chains``), greedy merging
of similar tokens in descending score order with cycle rejection
(``merge_similar``), and collapsing of unbranched runs (``collapse_chains``).
Each generation keeps exactly one traversal path through the graph, so no
rendered transition ever mixes a prefix of one output with the suffix of
another, and the original text is recoverable from any stage.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping

import numpy as np

from .embedding import (
    ContextEmbedder,
    HashedTrigramEmbedder,
    POSITION_PENALTY_SCALE,
    is_stopword,
)
from .segmentation import SegmentationMode, TokenSequence

DEFAULT_MERGE_THRESHOLD = 0.5
DEFAULT_PROMPT_ID = "prompt-0"

EXPORT_VERSION = 1


@dataclass(frozen=True)
class LatticeNode:
    """One merged token (or collapsed span). Members are half-open
    (generation_id, start, stop) token ranges, sorted by corpus order."""

    id: str
    label: str
    members: tuple[tuple[str, int, int], ...]
    frequency: int
    prompt_counts: dict[str, int]


@dataclass(frozen=True)
class TraversalEdge:
    from_node: str
    to_node: str
    generation_id: str
    step_index: int


@dataclass(frozen=True)
class LatticeStats:
    node_count: int
    traversal_edge_count: int
    compression_ratio: float
    mean_out_degree: float
    distinct_path_count: int

    def to_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "traversal_edge_count": self.traversal_edge_count,
            "compression_ratio": self.compression_ratio,
            "mean_out_degree": self.mean_out_degree,
            "distinct_path_count": self.distinct_path_count,
        }


@dataclass(frozen=True)
class TokenLattice:
    """Immutable lattice: nodes, one node-id path per generation, and the
    corpus it was built from (absent when loaded from an export)."""

    mode: SegmentationMode
    threshold: float | None
    nodes: dict[str, LatticeNode]
    paths: dict[str, tuple[str, ...]]
    gen_order: tuple[str, ...]
    prompt_of: dict[str, str]
    seqs: tuple[TokenSequence, ...] | None = None
    node_order: tuple[str, ...] = field(default_factory=tuple)

    def adjacency(self) -> dict[tuple[str, str], int]:
        """Node-to-node multi-edge counts, derived from traversals only."""
        counts: dict[tuple[str, str], int] = {}
        for gen in self.gen_order:
            path = self.paths[gen]
            for a, b in zip(path, path[1:]):
                counts[(a, b)] = counts.get((a, b), 0) + 1
        return counts

    def successors(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {nid: [] for nid in self.nodes}
        seen: set[tuple[str, str]] = set()
        for gen in self.gen_order:
            path = self.paths[gen]
            for a, b in zip(path, path[1:]):
                if (a, b) not in seen:
                    seen.add((a, b))
                    out[a].append(b)
        return out

    def predecessors(self) -> dict[str, list[str]]:
        inc: dict[str, list[str]] = {nid: [] for nid in self.nodes}
        for a, kids in self.successors().items():
            for b in kids:
                inc[b].append(a)
        return inc

    def traversal_edges(self) -> Iterator[TraversalEdge]:
        for gen in self.gen_order:
            path = self.paths[gen]
            for step, (a, b) in enumerate(zip(path, path[1:])):
                yield TraversalEdge(a, b, gen, step)

    def total_tokens(self) -> int:
        return sum(
            stop - start
            for node in self.nodes.values()
            for (_, start, stop) in node.members
        )


def _node_id(members: tuple[tuple[str, int, int], ...]) -> str:
    payload = json.dumps(list(members), separators=(",", ":")).encode("utf-8")
    return hashlib.blake2b(payload, digest_size=8).hexdigest()


def _span_text(seq: TokenSequence, start: int, stop: int) -> str:
    parts = []
    for t in seq.tokens[start : stop - 1]:
        parts.append(t.surface + t.trailing_separator)
    parts.append(seq.tokens[stop - 1].surface)
    return "".join(parts)


def _make_node(members: list[tuple[str, int, int]],
               seq_by_gen: Mapping[str, TokenSequence],
               prompt_of: Mapping[str, str],
               label: str | None = None) -> LatticeNode:
    members_t = tuple(members)
    gens = []
    seen = set()
    for gen, _, _ in members_t:
        if gen not in seen:
            seen.add(gen)
            gens.append(gen)
    prompt_counts: dict[str, int] = {}
    for gen in gens:
        pid = prompt_of.get(gen, DEFAULT_PROMPT_ID)
        prompt_counts[pid] = prompt_counts.get(pid, 0) + 1
    if label is None:
        gen0, start0, stop0 = members_t[0]
        label = _span_text(seq_by_gen[gen0], start0, stop0)
    return LatticeNode(
        id=_node_id(members_t),
        label=label,
        members=members_t,
        frequency=len(gens),
        prompt_counts=prompt_counts,
    )


def build_chains(seqs: list[TokenSequence],
                 mode: SegmentationMode | str = SegmentationMode.SPACE,
                 prompt_of: Mapping[str, str] | None = None) -> TokenLattice:
    """One node per token occurrence, one linear chain per generation."""
    mode = SegmentationMode(mode)
    prompt_of = dict(prompt_of or {})
    seq_by_gen = {s.generation_id: s for s in seqs}
    if len(seq_by_gen) != len(seqs):
        raise ValueError("duplicate generation ids in corpus")

    nodes: dict[str, LatticeNode] = {}
    node_order: list[str] = []
    paths: dict[str, tuple[str, ...]] = {}
    for seq in seqs:
        path = []
        for tok in seq.tokens:
            node = _make_node([(seq.generation_id, tok.index, tok.index + 1)],
                              seq_by_gen, prompt_of)
            nodes[node.id] = node
            node_order.append(node.id)
            path.append(node.id)
        paths[seq.generation_id] = tuple(path)

    return TokenLattice(
        mode=mode,
        threshold=None,
        nodes=nodes,
        paths=paths,
        gen_order=tuple(s.generation_id for s in seqs),
        prompt_of=prompt_of,
        seqs=tuple(seqs),
        node_order=tuple(node_order),
    )


class MergeScorer:
    """Scores candidate token pairs for merging, vectorized over the corpus.

    Pairs with identical case-folded surfaces score ``1 - penalty`` without
    touching the embedder; all other pairs follow the same stopword /
    contextual-cosine rules as :func:`genlattice.embedding.token_similarity`.
    Candidate lists are cached, sorted by strictly descending score (ties:
    corpus order of the pair members), so a higher threshold selects a
    prefix of a lower threshold's list.
    """

    def __init__(self, seqs: tuple[TokenSequence, ...], embedder: ContextEmbedder):
        self.seqs = seqs
        self.embedder = embedder
        self._tables_ready = False
        self._floor: float | None = None
        self._cached: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None

    def _build_tables(self) -> None:
        if self._tables_ready:
            return
        occ_gen, occ_idx, ctx_strings, folds, stops, bare_strings = [], [], [], [], [], []
        w = self.embedder.window
        for g, seq in enumerate(self.seqs):
            for tok in seq.tokens:
                occ_gen.append(g)
                occ_idx.append(tok.index)
                ctx_strings.append(ContextEmbedder.context_string(seq, tok.index, w))
                folds.append(tok.surface.casefold())
                stop = is_stopword(tok.surface)
                stops.append(stop)
                bare_strings.append(tok.surface if stop else "")
        n = len(occ_gen)
        self.n_occ = n
        self.occ_gen = np.asarray(occ_gen, dtype=np.int64)
        self.occ_idx = np.asarray(occ_idx, dtype=np.int64)
        self.is_stop = np.asarray(stops, dtype=bool)

        fold_ids: dict[str, int] = {}
        self.fold_id = np.asarray([fold_ids.setdefault(f, len(fold_ids)) for f in folds],
                                  dtype=np.int64)

        unique = sorted(set(ctx_strings) | {s for s in bare_strings if s})
        self.embedder.warm(unique)
        row_of = {s: i for i, s in enumerate(unique)}
        mat = np.stack([self.embedder.values(s) for s in unique]) if unique else \
            np.zeros((0, 1))
        norms = np.linalg.norm(mat, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        self.emb = mat / norms
        self.ctx_row = np.asarray([row_of[s] for s in ctx_strings], dtype=np.int64)
        self.bare_row = np.asarray(
            [row_of[s] if s else -1 for s in bare_strings], dtype=np.int64)
        self.has_prev = np.asarray(
            [occ_idx[i] > 0 for i in range(n)], dtype=bool)
        last = {}
        for i in range(n):
            last[occ_gen[i]] = occ_idx[i]
        self.has_next = np.asarray(
            [occ_idx[i] < last[occ_gen[i]] for i in range(n)], dtype=bool)
        # previous/next occurrence in the same generation is occ-1/occ+1
        self.prev_row = np.where(self.has_prev, np.roll(self.ctx_row, 1), -1)
        self.next_row = np.where(self.has_next, np.roll(self.ctx_row, -1), -1)

        buckets: dict[int, list[int]] = {}
        for i in range(n):
            buckets.setdefault(occ_idx[i], []).append(i)
        self.buckets = {k: np.asarray(v, dtype=np.int64) for k, v in buckets.items()}
        self._tables_ready = True

    def _stopword_scores(self, aa: np.ndarray, bb: np.ndarray) -> np.ndarray:
        emb = self.emb

        def side(row_a, row_b, have):
            sims = np.empty(len(aa), dtype=np.float64)
            both = have[aa] & have[bb]
            if both.any():
                sims[both] = np.einsum("ij,ij->i",
                                       emb[row_a[aa[both]]], emb[row_b[bb[both]]])
            rest = ~both
            if rest.any():
                sims[rest] = np.einsum("ij,ij->i",
                                       emb[self.bare_row[aa[rest]]],
                                       emb[self.bare_row[bb[rest]]])
            return np.clip(sims, -1.0, 1.0)

        sim_prev = side(self.prev_row, self.prev_row, self.has_prev)
        sim_next = side(self.next_row, self.next_row, self.has_next)
        return (sim_prev + sim_next) / 2.0

    def _enumerate(self, floor: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        self._build_tables()
        scores_out: list[np.ndarray] = []
        a_out: list[np.ndarray] = []
        b_out: list[np.ndarray] = []
        if self.n_occ == 0 or floor > 1.0:
            empty = np.empty(0)
            return empty, empty.astype(np.int64), empty.astype(np.int64)

        d_max = int(np.floor(POSITION_PENALTY_SCALE * (1.0 - floor) + 1e-9))
        idx_values = sorted(self.buckets)
        emb = self.emb
        for d in range(0, d_max + 1):
            penalty = d / POSITION_PENALTY_SCALE
            for i in idx_values:
                j = i + d
                if j not in self.buckets:
                    continue
                ids_a = self.buckets[i]
                ids_b = self.buckets[j]
                s = np.clip(emb[self.ctx_row[ids_a]] @ emb[self.ctx_row[ids_b]].T,
                            -1.0, 1.0)
                fold_eq = self.fold_id[ids_a][:, None] == self.fold_id[ids_b][None, :]
                same_gen = self.occ_gen[ids_a][:, None] == self.occ_gen[ids_b][None, :]
                stop_pair = self.is_stop[ids_a][:, None] & self.is_stop[ids_b][None, :]

                redo = stop_pair & ~fold_eq
                if redo.any():
                    ra, rb = np.nonzero(redo)
                    s[ra, rb] = self._stopword_scores(ids_a[ra], ids_b[rb])
                s[fold_eq] = 1.0
                score = s - penalty

                eligible = ~same_gen if d == 0 else (~same_gen | fold_eq)
                if d == 0:
                    eligible &= np.tri(len(ids_a), len(ids_b), k=-1, dtype=bool).T
                keep = eligible & (score >= floor)
                if keep.any():
                    ka, kb = np.nonzero(keep)
                    scores_out.append(score[ka, kb])
                    a_out.append(ids_a[ka])
                    b_out.append(ids_b[kb])

        if not scores_out:
            empty = np.empty(0)
            return empty, empty.astype(np.int64), empty.astype(np.int64)
        scores = np.concatenate(scores_out)
        a = np.concatenate(a_out)
        b = np.concatenate(b_out)
        # canonical pair order: member with the smaller corpus position first
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        order = np.lexsort((hi, lo, -scores))
        return scores[order], lo[order], hi[order]

    def candidates(self, threshold: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(scores, occ_a, occ_b), descending, filtered to score >= threshold."""
        if self._cached is None or self._floor is None or threshold < self._floor:
            self._cached = self._enumerate(threshold)
            self._floor = threshold
        scores, a, b = self._cached
        cut = int(np.searchsorted(-scores, -threshold, side="right"))
        return scores[:cut], a[:cut], b[:cut]


class _OrderedDag:
    """Class-level DAG with an incrementally maintained topological order,
    so cycle checks before a merge only explore the affected window."""

    def __init__(self, topo_roots: list[int]):
        self.out: dict[int, set[int]] = {r: set() for r in topo_roots}
        self.inc: dict[int, set[int]] = {r: set() for r in topo_roots}
        self.pos = {r: i for i, r in enumerate(topo_roots)}

    def add_edge(self, u: int, v: int) -> None:
        self.out[u].add(v)
        self.inc[v].add(u)

    def reaches(self, src: int, dst: int) -> bool:
        """Is there a directed path src -> dst? (pos[src] < pos[dst] assumed)"""
        limit = self.pos[dst]
        stack = [src]
        seen = {src}
        while stack:
            node = stack.pop()
            for nxt in self.out[node]:
                if nxt == dst:
                    return True
                if nxt not in seen and self.pos[nxt] < limit:
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    def _reorder(self, x: int, y: int) -> None:
        # Pearce-Kelly repair for a violating edge x -> y (pos[y] < pos[x]):
        # everything reachable from y within the window moves after
        # everything that reaches x within it.
        lo, hi = self.pos[y], self.pos[x]
        fwd: list[int] = []
        seen = {y}
        stack = [y]
        while stack:
            node = stack.pop()
            fwd.append(node)
            for nxt in self.out[node]:
                if nxt not in seen and self.pos[nxt] <= hi:
                    seen.add(nxt)
                    stack.append(nxt)
        back: list[int] = []
        seen_b = {x}
        stack = [x]
        while stack:
            node = stack.pop()
            back.append(node)
            for prv in self.inc[node]:
                if prv not in seen_b and self.pos[prv] >= lo:
                    seen_b.add(prv)
                    stack.append(prv)
        if seen & seen_b:
            raise AssertionError("cycle slipped past the merge check")
        fwd.sort(key=self.pos.__getitem__)
        back.sort(key=self.pos.__getitem__)
        slots = sorted(self.pos[n] for n in fwd + back)
        for slot, node in zip(slots, back + fwd):
            self.pos[node] = slot

    def contract(self, lo: int, hi: int) -> None:
        """Merge class hi into lo (requires: no path between them)."""
        for nxt in self.out.pop(hi):
            self.inc[nxt].discard(hi)
            self.out[lo].add(nxt)
            self.inc[nxt].add(lo)
        for prv in self.inc.pop(hi):
            self.out[prv].discard(hi)
            self.out[prv].add(lo)
            self.inc[lo].add(prv)
        # hi keeps a hole in the order; harmless, positions stay comparable
        del self.pos[hi]
        while True:
            bad = [p for p in self.inc[lo] if self.pos[p] > self.pos[lo]]
            if not bad:
                break
            self._reorder(bad[0], lo)


def _occurrence_tables(lattice: TokenLattice) -> tuple[dict[tuple[str, int], int], int]:
    """Map (generation_id, token_index) -> global occurrence id."""
    assert lattice.seqs is not None
    occ_of: dict[tuple[str, int], int] = {}
    n = 0
    for seq in lattice.seqs:
        for tok in seq.tokens:
            occ_of[(seq.generation_id, tok.index)] = n
            n += 1
    return occ_of, n


def merge_similar(lattice: TokenLattice, threshold: float,
                  embedder: ContextEmbedder | None = None,
                  scorer: MergeScorer | None = None) -> TokenLattice:
    """Greedy merge of similar token nodes, highest score first, skipping any
    merge that would create a cycle in the node adjacency."""
    if lattice.seqs is None:
        raise ValueError("lattice was loaded without its corpus; cannot merge")
    if not math.isfinite(threshold):
        raise ValueError(f"merge threshold must be finite, got {threshold}")
    if scorer is None:
        embedder = embedder or ContextEmbedder(HashedTrigramEmbedder())
        scorer = MergeScorer(lattice.seqs, embedder)

    occ_of, n = _occurrence_tables(lattice)

    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    # seed the partition and adjacency from the incoming lattice
    for node in lattice.nodes.values():
        occs = []
        for gen, start, stop in node.members:
            if stop - start != 1:
                raise ValueError("merge requires single-token nodes (pre-collapse)")
            occs.append(occ_of[(gen, start)])
        root = min(occs)
        for o in occs:
            parent[o] = root

    class_roots: list[int] = sorted({find(i) for i in range(n)})
    # topological order of classes via Kahn, smallest occurrence id first
    edges: dict[int, set[int]] = {r: set() for r in class_roots}
    indeg: dict[int, int] = {r: 0 for r in class_roots}
    for gen in lattice.gen_order:
        seq_path = lattice.paths[gen]
        prev_root = None
        for step, _ in enumerate(seq_path):
            root = find(occ_of[(gen, step)])
            if prev_root is not None and root not in edges[prev_root]:
                edges[prev_root].add(root)
                indeg[root] += 1
            prev_root = root

    ready = [r for r in class_roots if indeg[r] == 0]
    heapq.heapify(ready)
    topo: list[int] = []
    while ready:
        r = heapq.heappop(ready)
        topo.append(r)
        for nxt in sorted(edges[r]):
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(ready, nxt)
    if len(topo) != len(class_roots):
        raise ValueError("incoming lattice adjacency is not acyclic")

    dag = _OrderedDag(topo)
    for u, nexts in edges.items():
        for v in nexts:
            dag.add_edge(u, v)

    _, cand_a, cand_b = scorer.candidates(threshold)
    rejected: set[tuple[int, int]] = set()
    for occ_a, occ_b in zip(cand_a.tolist(), cand_b.tolist()):
        ra, rb = find(occ_a), find(occ_b)
        if ra == rb:
            continue
        key = (ra, rb) if ra < rb else (rb, ra)
        if key in rejected:
            continue
        lo, hi = (ra, rb) if dag.pos[ra] < dag.pos[rb] else (rb, ra)
        if dag.reaches(lo, hi):
            rejected.add(key)
            continue
        dag.contract(lo, hi)
        parent[hi] = lo

    return _rebuild(lattice, find, threshold)


def _rebuild(lattice: TokenLattice, find: Callable[[int], int],
             threshold: float) -> TokenLattice:
    assert lattice.seqs is not None
    seq_by_gen = {s.generation_id: s for s in lattice.seqs}
    occ_of, n = _occurrence_tables(lattice)

    members_by_root: dict[int, list[tuple[str, int, int]]] = {}
    for seq in lattice.seqs:
        for tok in seq.tokens:
            root = find(occ_of[(seq.generation_id, tok.index)])
            members_by_root.setdefault(root, []).append(
                (seq.generation_id, tok.index, tok.index + 1))

    nodes: dict[str, LatticeNode] = {}
    node_order: list[str] = []
    id_of_root: dict[int, str] = {}
    for root in sorted(members_by_root):
        node = _make_node(members_by_root[root], seq_by_gen, lattice.prompt_of)
        nodes[node.id] = node
        node_order.append(node.id)
        id_of_root[root] = node.id

    paths = {}
    for seq in lattice.seqs:
        paths[seq.generation_id] = tuple(
            id_of_root[find(occ_of[(seq.generation_id, tok.index)])]
            for tok in seq.tokens)

    return TokenLattice(
        mode=lattice.mode,
        threshold=threshold,
        nodes=nodes,
        paths=paths,
        gen_order=lattice.gen_order,
        prompt_of=lattice.prompt_of,
        seqs=lattice.seqs,
        node_order=tuple(node_order),
    )


def collapse_chains(lattice: TokenLattice) -> TokenLattice:
    """Collapse maximal unbranched runs that every traversal passes through
    in full, concatenating their labels with the original separators."""
    if lattice.seqs is None:
        raise ValueError("lattice was loaded without its corpus; cannot collapse")
    seq_by_gen = {s.generation_id: s for s in lattice.seqs}

    succ = lattice.successors()
    pred = lattice.predecessors()
    starts: dict[str, int] = {}
    ends: dict[str, int] = {}
    for gen in lattice.gen_order:
        path = lattice.paths[gen]
        if path:
            starts[path[0]] = starts.get(path[0], 0) + 1
            ends[path[-1]] = ends.get(path[-1], 0) + 1

    next_in_run: dict[str, str] = {}
    prev_in_run: dict[str, str] = {}
    for u in lattice.nodes:
        if len(succ[u]) != 1 or u in ends:
            continue
        v = succ[u][0]
        if len(pred[v]) != 1 or v in starts:
            continue
        next_in_run[u] = v
        prev_in_run[v] = u
    if not next_in_run:
        return lattice

    runs: dict[str, list[str]] = {}  # head -> full run
    run_head: dict[str, str] = {}
    for u in lattice.node_order:
        if u in prev_in_run or u not in next_in_run:
            continue
        run = [u]
        while run[-1] in next_in_run:
            run.append(next_in_run[run[-1]])
        runs[u] = run
        for member in run:
            run_head[member] = u

    # ordered member ranges per (gen, node), consumed in traversal order
    visit_ranges: dict[tuple[str, str], list[tuple[int, int]]] = {}
    for nid, node in lattice.nodes.items():
        for gen, start, stop in node.members:
            visit_ranges.setdefault((gen, nid), []).append((start, stop))

    new_members: dict[str, list[tuple[str, int, int]]] = {}
    new_paths: dict[str, list[str]] = {}
    cursor: dict[tuple[str, str], int] = {}

    def next_range(gen: str, nid: str) -> tuple[int, int]:
        k = cursor.get((gen, nid), 0)
        cursor[(gen, nid)] = k + 1
        return visit_ranges[(gen, nid)][k]

    for gen in lattice.gen_order:
        path = lattice.paths[gen]
        out: list[str] = []
        i = 0
        while i < len(path):
            nid = path[i]
            head = run_head.get(nid)
            if head is not None:
                run = runs[head]
                if path[i : i + len(run)] != tuple(run):
                    raise AssertionError("traversal disagrees with collapse run")
                start, _ = next_range(gen, run[0])
                stop = next_range(gen, run[-1])[1]
                for mid in run[1:-1]:
                    next_range(gen, mid)
                new_members.setdefault(head, []).append((gen, start, stop))
                out.append(head)
                i += len(run)
            else:
                start, stop = next_range(gen, nid)
                new_members.setdefault(nid, []).append((gen, start, stop))
                out.append(nid)
                i += 1
        new_paths[gen] = out

    nodes: dict[str, LatticeNode] = {}
    node_order: list[str] = []
    final_id: dict[str, str] = {}
    for old_id in lattice.node_order:
        if old_id not in new_members:
            continue  # interior run member, absorbed
        node = _make_node(new_members[old_id], seq_by_gen, lattice.prompt_of)
        nodes[node.id] = node
        node_order.append(node.id)
        final_id[old_id] = node.id

    return TokenLattice(
        mode=lattice.mode,
        threshold=lattice.threshold,
        nodes=nodes,
        paths={gen: tuple(final_id[nid] for nid in path)
               for gen, path in new_paths.items()},
        gen_order=lattice.gen_order,
        prompt_of=lattice.prompt_of,
        seqs=lattice.seqs,
        node_order=tuple(node_order),
    )


def stats(lattice: TokenLattice) -> LatticeStats:
    """Summary of the lattice as given (call before collapse for a pure
    merge-compression reading, after for display-node counts)."""
    node_count = len(lattice.nodes)
    total_tokens = lattice.total_tokens()
    succ = lattice.successors()
    out_degrees = sum(len(v) for v in succ.values())
    paths_seen = {lattice.paths[g] for g in lattice.gen_order}
    return LatticeStats(
        node_count=node_count,
        traversal_edge_count=sum(
            max(len(lattice.paths[g]) - 1, 0) for g in lattice.gen_order),
        compression_ratio=(node_count / total_tokens) if total_tokens else 1.0,
        mean_out_degree=(out_degrees / node_count) if node_count else 0.0,
        distinct_path_count=len(paths_seen),
    )


def reconstruct_generation(lattice: TokenLattice, generation_id: str) -> str:
    """Rebuild one generation's text from its traversal and member ranges."""
    if lattice.seqs is None:
        raise ValueError("lattice was loaded without its corpus")
    seq = next(s for s in lattice.seqs if s.generation_id == generation_id)
    cursor: dict[str, int] = {}
    ranges: dict[str, list[tuple[int, int]]] = {}
    for nid in lattice.paths[generation_id]:
        if nid not in ranges:
            ranges[nid] = [
                (start, stop) for (gen, start, stop) in lattice.nodes[nid].members
                if gen == generation_id
            ]
    pos = 0
    parts: list[str] = []
    for nid in lattice.paths[generation_id]:
        k = cursor.get(nid, 0)
        cursor[nid] = k + 1
        start, stop = ranges[nid][k]
        if start != pos:
            raise AssertionError(f"traversal does not tile generation: "
                                 f"expected token {pos}, node covers {start}")
        parts.extend(t.surface + t.trailing_separator for t in seq.tokens[start:stop])
        pos = stop
    if pos != len(seq):
        raise AssertionError("traversal ends before the final token")
    return "".join(parts)


class LatticeBuilder:
    """Builds lattices for one corpus, caching pair scores so threshold
    sweeps never re-embed or re-score.

    With ``score_floor`` set (interactive sessions use 0.0), candidates are
    enumerated once down to that floor and every later threshold is a pure
    prefix slice of the cached list.
    """

    def __init__(self, seqs: list[TokenSequence],
                 mode: SegmentationMode | str = SegmentationMode.SPACE,
                 embedder: ContextEmbedder | None = None,
                 prompt_of: Mapping[str, str] | None = None,
                 score_floor: float | None = None):
        self.embedder = embedder or ContextEmbedder(HashedTrigramEmbedder())
        self.chains = build_chains(seqs, mode, prompt_of)
        self.scorer = MergeScorer(self.chains.seqs, self.embedder)
        if score_floor is not None:
            self.scorer.candidates(score_floor)

    def build(self, threshold: float = DEFAULT_MERGE_THRESHOLD,
              collapse: bool = True) -> TokenLattice:
        merged = merge_similar(self.chains, threshold, scorer=self.scorer)
        return collapse_chains(merged) if collapse else merged


def build_lattice(seqs: list[TokenSequence],
                  mode: SegmentationMode | str = SegmentationMode.SPACE,
                  threshold: float = DEFAULT_MERGE_THRESHOLD,
                  embedder: ContextEmbedder | None = None,
                  prompt_of: Mapping[str, str] | None = None,
                  collapse: bool = True) -> TokenLattice:
    """Full pipeline: chains -> merge -> (optional) collapse."""
    return LatticeBuilder(seqs, mode, embedder, prompt_of).build(threshold, collapse)


def rebuild_with_threshold(builder: LatticeBuilder, new_threshold: float,
                           collapse: bool = True) -> TokenLattice:
    """Re-run merge + collapse at a new threshold using cached scores."""
    return builder.build(new_threshold, collapse)


def to_json(lattice: TokenLattice) -> dict:
    """Versioned export; the schema shared by the CLI, service, and UI."""
    return {
        "version": EXPORT_VERSION,
        "mode": lattice.mode.value,
        "threshold": lattice.threshold,
        "nodes": [
            {
                "id": node.id,
                "label": node.label,
                "members": [list(m) for m in node.members],
                "frequency": node.frequency,
                "prompt_counts": node.prompt_counts,
            }
            for node in (lattice.nodes[nid] for nid in lattice.node_order)
        ],
        "traversals": [
            {"gen": gen, "prompt": lattice.prompt_of.get(gen, DEFAULT_PROMPT_ID),
             "path": list(lattice.paths[gen])}
            for gen in lattice.gen_order
        ],
    }


def from_json(doc: dict) -> TokenLattice:
    if doc.get("version") != EXPORT_VERSION:
        raise ValueError(f"unsupported lattice export version: {doc.get('version')}")
    nodes = {}
    node_order = []
    for entry in doc["nodes"]:
        node = LatticeNode(
            id=entry["id"],
            label=entry["label"],
            members=tuple((m[0], m[1], m[2]) for m in entry["members"]),
            frequency=entry["frequency"],
            prompt_counts=dict(entry.get("prompt_counts", {})),
        )
        nodes[node.id] = node
        node_order.append(node.id)
    paths = {}
    gen_order = []
    prompt_of = {}
    for trav in doc["traversals"]:
        gen_order.append(trav["gen"])
        paths[trav["gen"]] = tuple(trav["path"])
        prompt_of[trav["gen"]] = trav.get("prompt", DEFAULT_PROMPT_ID)
    return TokenLattice(
        mode=SegmentationMode(doc["mode"]),
        threshold=doc.get("threshold"),
        nodes=nodes,
        paths=paths,
        gen_order=tuple(gen_order),
        prompt_of=prompt_of,
        seqs=None,
        node_order=tuple(node_order),
    )


def to_dot(lattice: TokenLattice) -> str:
    """Adjacency-only DOT view for debugging; lattice paths can combine
    fragments of different generations, so this is not faithful to them."""
    lines = [
        "digraph lattice {",
        '  // adjacency only: paths not faithful',
        "  rankdir=LR;",
    ]
    for nid in lattice.node_order:
        label = lattice.nodes[nid].label.replace("\\", "\\\\").replace('"', '\\"')
        lines.append(f'  "{nid}" [label="{label}"];')
    for (a, b), count in sorted(lattice.adjacency().items()):
        lines.append(f'  "{a}" -> "{b}" [penwidth={min(count, 8)}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
