"""Interactive session state: prompts, generation batches, sliders, selection.

Every mutation produces a new immutable snapshot (undo-friendly, safe to
read concurrently); lattices and layouts are memoized per
(corpus, mode, threshold [, interpolation, seed, longtail]) so slider moves
reuse cached similarity scores instead of re-embedding.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

from .colors import palette_color
from .embedding import ContextEmbedder, HashedTrigramEmbedder
from .lattice import (
    DEFAULT_MERGE_THRESHOLD,
    LatticeBuilder,
    TokenLattice,
    to_json as lattice_to_json,
)
from .layout import LayoutParams, LayoutResult, compute_layout, layout_to_json
from .segmentation import RawGeneration, SegmentationMode, segment_generation

SESSION_BUNDLE_VERSION = 1


class ConflictError(ValueError):
    """Duplicate identifier (e.g. re-adding an existing prompt)."""


class NotFoundError(KeyError):
    """Unknown prompt, generation, or node id."""


@dataclass(frozen=True)
class PromptConfig:
    prompt_id: str
    prompt_text: str
    model_id: str = ""
    temperature: float = 0.7
    n_generations: int = 20
    palette_color: str | None = None

    def __post_init__(self):
        if self.n_generations < 1:
            raise ValueError("n_generations must be >= 1")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")


@dataclass(frozen=True)
class ViewState:
    selected_node_ids: frozenset[str] = frozenset()
    longtail_t: float = 0.0
    merge_threshold: float = DEFAULT_MERGE_THRESHOLD
    parent_interpolation: float = 0.5
    mode: SegmentationMode = SegmentationMode.SPACE
    comparison_layout: str = "merged"  # or "side_by_side"
    seed: int = 42


@dataclass(frozen=True)
class FilterResult:
    emphasized_generation_ids: frozenset[str]
    deemphasized_generation_ids: frozenset[str]


@dataclass(frozen=True)
class Snapshot:
    snapshot_id: str
    prompts: tuple[PromptConfig, ...] = ()
    generations: tuple[tuple[str, tuple[RawGeneration, ...]], ...] = ()
    view: ViewState = field(default_factory=ViewState)

    def prompt(self, prompt_id: str) -> PromptConfig:
        for p in self.prompts:
            if p.prompt_id == prompt_id:
                return p
        raise NotFoundError(prompt_id)

    def generations_for(self, prompt_id: str) -> tuple[RawGeneration, ...]:
        for pid, gens in self.generations:
            if pid == prompt_id:
                return gens
        return ()

    def all_generations(self) -> list[RawGeneration]:
        return [g for _, gens in self.generations for g in gens]

    def palette(self) -> dict[str, str]:
        return {p.prompt_id: p.palette_color or palette_color(i)
                for i, p in enumerate(self.prompts)}


class Session:
    """Single-writer session with immutable snapshots and derived caches."""

    def __init__(self, embedder: ContextEmbedder | None = None,
                 session_id: str = "session"):
        self.session_id = session_id
        self.embedder = embedder or ContextEmbedder(HashedTrigramEmbedder())
        self._history: list[Snapshot] = [Snapshot(snapshot_id=f"{session_id}:0")]
        self._builders: dict[tuple, LatticeBuilder] = {}
        self._lattices: dict[tuple, TokenLattice] = {}
        self._layouts: dict[tuple, LayoutResult] = {}

    @property
    def current(self) -> Snapshot:
        return self._history[-1]

    @property
    def history(self) -> tuple[Snapshot, ...]:
        return tuple(self._history)

    def undo(self) -> Snapshot:
        """Step back one snapshot (no-op at the initial state)."""
        if len(self._history) > 1:
            self._history.pop()
        return self.current

    def _commit(self, snap: Snapshot) -> Snapshot:
        snap = replace(snap, snapshot_id=f"{self.session_id}:{len(self._history)}")
        self._history.append(snap)
        return snap

    # ---- prompt / generation management -------------------------------

    def add_prompt(self, config: PromptConfig) -> Snapshot:
        snap = self.current
        if any(p.prompt_id == config.prompt_id for p in snap.prompts):
            raise ConflictError(f"prompt {config.prompt_id!r} already exists")
        if config.palette_color is None:
            config = replace(config, palette_color=palette_color(len(snap.prompts)))
        return self._commit(replace(snap, prompts=snap.prompts + (config,)))

    def add_generations(self, prompt_id: str,
                        generations: Iterable[RawGeneration]) -> Snapshot:
        snap = self.current
        snap.prompt(prompt_id)  # raises NotFoundError for unknown prompts
        incoming = tuple(generations)
        existing = dict(snap.generations)
        merged = existing.get(prompt_id, ()) + incoming
        existing[prompt_id] = merged
        ordered = tuple(
            (p.prompt_id, existing.get(p.prompt_id, ())) for p in snap.prompts
        )
        return self._commit(replace(snap, generations=ordered))

    # ---- view state ----------------------------------------------------

    def set_view(self, **changes) -> Snapshot:
        snap = self.current
        return self._commit(replace(snap, view=replace(snap.view, **changes)))

    def set_merge_threshold(self, threshold: float) -> Snapshot:
        """Re-threshold the lattice; selection follows surviving nodes by
        member intersection and is dropped where nothing intersects."""
        snap = self.current
        if threshold == snap.view.merge_threshold:
            return snap
        had_selection = bool(snap.view.selected_node_ids)
        old_members: list[tuple[str, int, int]] = []
        for lat in self._current_lattices(snap).values():
            for nid in snap.view.selected_node_ids:
                if nid in lat.nodes:
                    old_members.extend(lat.nodes[nid].members)
        new_view = replace(snap.view, merge_threshold=threshold)
        snap = self._commit(replace(snap, view=new_view))
        if had_selection:
            remapped = set()
            for lat in self._current_lattices(snap).values():
                for node in lat.nodes.values():
                    for gen, start, stop in node.members:
                        if any(g == gen and start < ostop and ostart < stop
                               for g, ostart, ostop in old_members):
                            remapped.add(node.id)
                            break
            snap = self.set_view(selected_node_ids=frozenset(remapped))
        return snap

    # ---- lattice / layout assembly -------------------------------------

    def _corpus_key(self, gens: tuple[RawGeneration, ...], mode: SegmentationMode) -> tuple:
        digest = hashlib.sha256()
        for g in gens:
            digest.update(g.id.encode())
            digest.update(b"\x00")
            digest.update(g.text.encode())
            digest.update(b"\x01")
        return (digest.hexdigest(), mode.value)

    def _builder(self, gens: tuple[RawGeneration, ...],
                 mode: SegmentationMode) -> LatticeBuilder:
        key = self._corpus_key(gens, mode)
        builder = self._builders.get(key)
        if builder is None:
            seqs = [segment_generation(g, mode) for g in gens]
            prompt_of = {g.id: g.prompt_id for g in gens}
            # floor 0.0: the whole slider range re-thresholds without rescoring
            builder = LatticeBuilder(seqs, mode, self.embedder, prompt_of,
                                     score_floor=0.0)
            self._builders[key] = builder
        return builder

    def lattice_for(self, gens: tuple[RawGeneration, ...],
                    mode: SegmentationMode, threshold: float,
                    collapse: bool = True) -> TokenLattice:
        key = self._corpus_key(gens, mode) + (threshold, collapse)
        lat = self._lattices.get(key)
        if lat is None:
            lat = self._builder(gens, mode).build(threshold, collapse)
            self._lattices[key] = lat
        return lat

    def _current_lattices(self, snap: Snapshot | None = None) -> dict[str, TokenLattice]:
        """Keyed by view: {'merged': ...} or one lattice per prompt id."""
        snap = snap or self.current
        view = snap.view
        if view.comparison_layout == "side_by_side" and len(snap.prompts) > 1:
            out = {}
            for p in snap.prompts:
                gens = snap.generations_for(p.prompt_id)
                if gens:
                    out[p.prompt_id] = self.lattice_for(
                        gens, view.mode, view.merge_threshold)
            return out
        gens = tuple(snap.all_generations())
        if not gens:
            return {}
        return {"merged": self.lattice_for(gens, view.mode, view.merge_threshold)}

    def assemble_comparison(self) -> dict[str, TokenLattice]:
        """Union lattice over all prompts, or one per prompt, per view state."""
        return self._current_lattices()

    def layout_for(self, lattice: TokenLattice, view: ViewState) -> LayoutResult:
        key = (lattice.node_order, lattice.gen_order,
               view.parent_interpolation, view.seed, view.longtail_t)
        cached = self._layouts.get(key)
        if cached is None:
            params = LayoutParams(parent_interpolation=view.parent_interpolation,
                                  seed=view.seed)
            cached = compute_layout(lattice, params,
                                    longtail_t=view.longtail_t,
                                    prompt_palette=self.current.palette())
            self._layouts[key] = cached
        return cached

    # ---- selection / filtering -----------------------------------------

    def select_nodes(self, node_ids: Iterable[str]) -> FilterResult:
        """A generation is emphasized iff its path visits every selected node."""
        wanted = frozenset(node_ids)
        snap = self.current
        lattices = self._current_lattices(snap)
        known = {nid for lat in lattices.values() for nid in lat.nodes}
        missing = wanted - known
        if missing:
            raise NotFoundError(f"unknown node ids: {sorted(missing)}")
        if snap.view.selected_node_ids != wanted:
            self.set_view(selected_node_ids=wanted)
        return self.filter_result()

    def filter_result(self) -> FilterResult:
        snap = self.current
        wanted = snap.view.selected_node_ids
        all_gens = {g.id for g in snap.all_generations()}
        if not wanted:
            return FilterResult(frozenset(all_gens), frozenset())
        emphasized = set()
        for lat in self._current_lattices(snap).values():
            for gen in lat.gen_order:
                visited = set(lat.paths[gen])
                if wanted <= visited:
                    emphasized.add(gen)
        return FilterResult(frozenset(emphasized), frozenset(all_gens - emphasized))

    def crosslink(self, generation_id: str) -> tuple[str, ...]:
        """List-to-graph link: the node path of one generation."""
        for lat in self._current_lattices().values():
            if generation_id in lat.paths:
                return lat.paths[generation_id]
        raise NotFoundError(generation_id)

    # ---- persistence -----------------------------------------------------

    def to_bundle(self, include_caches: bool = True) -> dict:
        snap = self.current
        bundle = {
            "version": SESSION_BUNDLE_VERSION,
            "session_id": self.session_id,
            "snapshot_id": snap.snapshot_id,
            "prompts": [
                {
                    "prompt_id": p.prompt_id,
                    "prompt_text": p.prompt_text,
                    "model_id": p.model_id,
                    "temperature": p.temperature,
                    "n_generations": p.n_generations,
                    "palette_color": p.palette_color,
                }
                for p in snap.prompts
            ],
            "generations": {
                pid: [
                    {
                        "id": g.id,
                        "prompt_id": g.prompt_id,
                        "text": g.text,
                        "model_id": g.model_id,
                        "temperature": g.temperature,
                        "sample_index": g.sample_index,
                    }
                    for g in gens
                ]
                for pid, gens in snap.generations
            },
            "view_state": {
                "selected_node_ids": sorted(snap.view.selected_node_ids),
                "longtail_t": snap.view.longtail_t,
                "merge_threshold": snap.view.merge_threshold,
                "parent_interpolation": snap.view.parent_interpolation,
                "mode": snap.view.mode.value,
                "comparison_layout": snap.view.comparison_layout,
                "seed": snap.view.seed,
            },
        }
        if include_caches:
            caches = {}
            for name, lat in self._current_lattices(snap).items():
                layout = self.layout_for(lat, snap.view)
                cache_key = json.dumps({
                    "view": name,
                    "mode": snap.view.mode.value,
                    "threshold": snap.view.merge_threshold,
                    "parent_interpolation": snap.view.parent_interpolation,
                    "seed": snap.view.seed,
                }, sort_keys=True)
                caches[cache_key] = {
                    "lattice": lattice_to_json(lat),
                    "layout": layout_to_json(
                        layout,
                        LayoutParams(
                            parent_interpolation=snap.view.parent_interpolation,
                            seed=snap.view.seed)),
                }
            bundle["caches"] = caches
        return bundle

    def save(self, path: str | Path, include_caches: bool = True) -> None:
        Path(path).write_text(
            json.dumps(self.to_bundle(include_caches), indent=2) + "\n", "utf-8")

    @classmethod
    def load(cls, path: str | Path,
             embedder: ContextEmbedder | None = None) -> "Session":
        return cls.from_bundle(json.loads(Path(path).read_text("utf-8")),
                               embedder=embedder)

    @classmethod
    def from_bundle(cls, bundle: dict,
                    embedder: ContextEmbedder | None = None) -> "Session":
        if bundle.get("version") != SESSION_BUNDLE_VERSION:
            raise ValueError(f"unsupported session bundle version: "
                             f"{bundle.get('version')}")
        session = cls(embedder=embedder,
                      session_id=bundle.get("session_id", "session"))
        for p in bundle.get("prompts", []):
            session.add_prompt(PromptConfig(
                prompt_id=p["prompt_id"],
                prompt_text=p["prompt_text"],
                model_id=p.get("model_id", ""),
                temperature=p.get("temperature", 0.7),
                n_generations=p.get("n_generations", 20),
                palette_color=p.get("palette_color"),
            ))
        for pid, gens in bundle.get("generations", {}).items():
            session.add_generations(pid, [
                RawGeneration(
                    id=g["id"], prompt_id=g["prompt_id"], text=g["text"],
                    model_id=g.get("model_id", ""),
                    temperature=g.get("temperature", 0.0),
                    sample_index=g.get("sample_index", 0),
                )
                for g in gens
            ])
        vs = bundle.get("view_state", {})
        session.set_view(
            selected_node_ids=frozenset(vs.get("selected_node_ids", [])),
            longtail_t=vs.get("longtail_t", 0.0),
            merge_threshold=vs.get("merge_threshold", DEFAULT_MERGE_THRESHOLD),
            parent_interpolation=vs.get("parent_interpolation", 0.5),
            mode=SegmentationMode(vs.get("mode", "space")),
            comparison_layout=vs.get("comparison_layout", "merged"),
            seed=vs.get("seed", 42),
        )
        return session
