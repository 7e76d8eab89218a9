"""Deterministic 2-D layout for token lattices.

Four ingredients drive positions: left-to-right placement from parents
(roots at a fixed offset, multi-parent nodes interpolated between the
leftmost and rightmost parent-derived position), vertical centering with
strength growing with node frequency, one spring per traversal edge (so
attraction scales with shared generations), and ellipse collision. The
whole computation is a pure function of (lattice, params): seeded jitter,
stable iteration orders, no wall-clock anywhere.
"""

from __future__ import annotations

import hashlib
import heapq
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .colors import LinearRGB, blend_weighted, hex_to_linear, linear_to_hex, palette_color
from .lattice import TokenLattice

MIN_SIZE_SCALE = 0.05
MAX_SIZE_SCALE = 1.0
MIN_OPACITY = 0.08
LAYOUT_EXPORT_VERSION = 1

# label geometry defaults; callers with real font metrics pass their own
CHAR_WIDTH = 7.2
LINE_HEIGHT = 16.0
LABEL_PAD = 6.0
MAX_LABEL_CHARS = 28

GeometryFn = Callable[[str, float], tuple[float, float]]


@dataclass(frozen=True)
class LayoutParams:
    left_offset: float = 40.0
    horizontal_gap: float = 18.0
    parent_interpolation: float = 0.5  # 0 = leftmost parent, 1 = rightmost
    center_strength: float = 0.05
    spring_stiffness: float = 0.08
    collision_padding: float = 2.0
    max_iterations: int = 1000
    convergence_epsilon: float = 0.1
    seed: int = 42

    def __post_init__(self):
        if not 0.0 <= self.parent_interpolation <= 1.0:
            raise ValueError("parent_interpolation must be in [0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.convergence_epsilon <= 0:
            raise ValueError("convergence_epsilon must be > 0")

    def to_dict(self) -> dict:
        return {
            "left_offset": self.left_offset,
            "horizontal_gap": self.horizontal_gap,
            "parent_interpolation": self.parent_interpolation,
            "center_strength": self.center_strength,
            "spring_stiffness": self.spring_stiffness,
            "collision_padding": self.collision_padding,
            "max_iterations": self.max_iterations,
            "convergence_epsilon": self.convergence_epsilon,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class LayoutNode:
    node_id: str
    x: float
    y: float
    rx: float
    ry: float
    size_scale: float
    opacity: float
    color: LinearRGB


@dataclass(frozen=True)
class LayoutResult:
    nodes: tuple[LayoutNode, ...]
    paths: tuple[tuple[str, tuple[tuple[float, float], ...]], ...]
    iterations_used: int
    converged: bool
    midline: float = 0.0


def node_size(frequency: int, total_generations: int) -> float:
    """Area-proportional scale: radius grows with sqrt(frequency)."""
    if not 1 <= frequency <= total_generations:
        raise ValueError("frequency must be in [1, total_generations]")
    scale = (frequency / total_generations) ** 0.5
    return min(MAX_SIZE_SCALE, max(MIN_SIZE_SCALE, scale))


def node_color(prompt_counts: Mapping[str, int],
               prompt_palette: Mapping[str, str]) -> LinearRGB:
    """Average of prompt colors weighted by generation counts, linear RGB."""
    colors = []
    weights = []
    for pid, count in sorted(prompt_counts.items()):
        colors.append(hex_to_linear(prompt_palette[pid]))
        weights.append(float(count))
    return blend_weighted(colors, weights)


def longtail_opacity(frequency: int, total_generations: int, t: float) -> float:
    """Fade nodes that appear in few generations; t=0 disables the fade."""
    cutoff = t * total_generations
    if frequency >= cutoff:
        return 1.0
    return max(MIN_OPACITY, frequency / cutoff)


def horizontal_target(parent_derived: list[float], parent_interpolation: float,
                      left_offset: float) -> float:
    """Target x for a node given its parents' derived positions."""
    if not parent_derived:
        return left_offset
    if len(parent_derived) == 1:
        return parent_derived[0]
    lo = min(parent_derived)
    hi = max(parent_derived)
    return lo + (hi - lo) * parent_interpolation


def default_geometry(label: str, size_scale: float) -> tuple[float, float]:
    chars = min(len(label), MAX_LABEL_CHARS)
    factor = 0.55 + 0.9 * size_scale
    rx = (chars * CHAR_WIDTH / 2 + LABEL_PAD) * factor
    ry = (LINE_HEIGHT / 2 + 2.0) * factor
    return rx, ry


def _jitter(seed: int, node_id: str, amplitude: float = 3.0) -> float:
    h = hashlib.blake2b(f"{seed}:{node_id}".encode(), digest_size=8).digest()
    unit = int.from_bytes(h, "big") / 2**64
    return (unit * 2.0 - 1.0) * amplitude


def _topo_order(lattice: TokenLattice) -> list[str]:
    rank = {nid: i for i, nid in enumerate(lattice.node_order)}
    by_rank = {i: nid for nid, i in rank.items()}
    succ = lattice.successors()
    indeg = {nid: 0 for nid in lattice.nodes}
    for kids in succ.values():
        for b in kids:
            indeg[b] += 1
    ready = [rank[nid] for nid in lattice.nodes if indeg[nid] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        nid = by_rank[heapq.heappop(ready)]
        order.append(nid)
        for nxt in succ[nid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(ready, rank[nxt])
    if len(order) != len(lattice.nodes):
        raise ValueError("lattice adjacency is not acyclic")
    return order


def _collision_pairs(xs, rxs):
    """Index pairs close enough in x to possibly overlap (sorted sweep)."""
    order = np.argsort(xs, kind="stable")
    sx = xs[order]
    srx = rxs[order]
    max_rx = float(srx.max()) if len(srx) else 0.0
    ends = np.searchsorted(sx, sx + srx + max_rx, side="right")
    left = []
    right = []
    for k in range(len(order)):
        e = ends[k]
        if e > k + 1:
            left.append(np.full(e - k - 1, order[k]))
            right.append(order[k + 1 : e])
    if not left:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(left), np.concatenate(right)


def _resolve_collisions(xs, ys, rxs, rys, relax: float, vertical_only: bool) -> float:
    """One Jacobi pass of ellipse separation; returns worst overlap metric."""
    a, b = _collision_pairs(xs, rxs)
    if len(a) == 0:
        return 1.0
    dx = xs[b] - xs[a]
    dy = ys[b] - ys[a]
    rx_sum = rxs[a] + rxs[b]
    ry_sum = rys[a] + rys[b]
    sx = dx / rx_sum
    sy = dy / ry_sum
    metric = np.sqrt(sx * sx + sy * sy)
    hit = metric < 1.0
    if not hit.any():
        return 1.0
    worst = float(metric[hit].min())

    ha, hb = a[hit], b[hit]
    m = metric[hit]
    if vertical_only:
        # keep x fixed: grow |dy| until the pair sits on the unit ellipse
        need = np.sqrt(np.maximum(1.0 - sx[hit] ** 2, 0.0)) * ry_sum[hit]
        have = np.abs(dy[hit])
        sign = np.where(dy[hit] != 0, np.sign(dy[hit]),
                        np.where(ha < hb, 1.0, -1.0))
        push = (need - have) * 0.5 * relax * sign
        np.add.at(ys, hb, push)
        np.add.at(ys, ha, -push)
    else:
        zero = m == 0.0
        safe_m = np.where(zero, 1.0, m)
        ux = np.where(zero, 0.0, sx[hit] / safe_m)
        uy = np.where(zero, np.where(ha < hb, 1.0, -1.0), sy[hit] / safe_m)
        gap = (1.0 - m) * 0.5 * relax
        np.add.at(xs, hb, ux * gap * rx_sum[hit])
        np.add.at(ys, hb, uy * gap * ry_sum[hit])
        np.add.at(xs, ha, -ux * gap * rx_sum[hit])
        np.add.at(ys, ha, -uy * gap * ry_sum[hit])
    return worst


def compute_layout(lattice: TokenLattice, params: LayoutParams = LayoutParams(),
                   *, longtail_t: float = 0.0,
                   prompt_palette: Mapping[str, str] | None = None,
                   geometry: GeometryFn | None = None) -> LayoutResult:
    """Lay out every node and one polyline per generation traversal."""
    geometry = geometry or default_geometry
    total = max(len(lattice.gen_order), 1)
    order = list(lattice.node_order)
    n = len(order)
    idx = {nid: i for i, nid in enumerate(order)}

    if prompt_palette is None:
        prompt_ids = sorted({lattice.prompt_of.get(g, "prompt-0")
                             for g in lattice.gen_order}) or ["prompt-0"]
        prompt_palette = {pid: palette_color(i) for i, pid in enumerate(prompt_ids)}

    freqs = np.array([lattice.nodes[nid].frequency for nid in order], dtype=np.float64)
    scales = np.array([node_size(int(f), total) for f in freqs]) if n else np.zeros(0)
    rxs = np.empty(n)
    rys = np.empty(n)
    for i, nid in enumerate(order):
        rxs[i], rys[i] = geometry(lattice.nodes[nid].label, float(scales[i]))

    succ = lattice.successors()
    parents: list[list[int]] = [[] for _ in range(n)]
    for u, kids in succ.items():
        for v in kids:
            parents[idx[v]].append(idx[u])
    topo = [idx[nid] for nid in _topo_order(lattice)]

    midline = 0.0
    xs = np.zeros(n)
    ys = np.array([midline + _jitter(params.seed, nid) for nid in order]) \
        if n else np.zeros(0)
    vys = np.zeros(n)

    def assign_x():
        for i in topo:
            derived = [xs[p] + rxs[p] + params.horizontal_gap for p in parents[i]]
            xs[i] = horizontal_target(derived, params.parent_interpolation,
                                      params.left_offset)

    assign_x()

    springs = sorted(
        ((idx[u], idx[v], count) for (u, v), count in lattice.adjacency().items()),
        key=lambda e: (e[0], e[1]),
    )
    # normalize by spring degree so hub nodes stay stable under many pulls
    spring_deg = np.zeros(n)
    for a, b, _ in springs:
        spring_deg[a] += 1
        spring_deg[b] += 1
    spring_deg = np.maximum(spring_deg, 1.0)
    center_k = np.minimum(1.0, params.center_strength * freqs)
    pad_rxs = rxs + params.collision_padding
    pad_rys = rys + params.collision_padding

    # velocity-damped Euler with geometric cooling (alpha), as in the usual
    # force simulations; collision resolves vertically so x keeps the
    # parent-derived placement exactly
    damping = 0.5
    alpha = 1.0
    alpha_decay = 0.0228
    alpha_floor = 0.02
    iterations = 0
    converged = False
    for iterations in range(1, params.max_iterations + 1):
        px = xs.copy()
        py = ys.copy()
        vys *= damping
        vys += alpha * center_k * (midline - ys)
        for a, b, count in springs:
            ddx = xs[b] - xs[a]
            ddy = ys[b] - ys[a]
            dist = (ddx * ddx + ddy * ddy) ** 0.5
            if dist < 1e-9:
                continue
            rest = rxs[a] + rxs[b] + params.horizontal_gap
            k = min(1.0, params.spring_stiffness * count)
            f = alpha * k * (dist - rest) / dist * 0.5
            vys[a] += f * ddy / spring_deg[a]
            vys[b] -= f * ddy / spring_deg[b]
        ys += vys
        for _ in range(2):
            _resolve_collisions(xs, ys, pad_rxs, pad_rys, relax=0.6,
                                vertical_only=True)
        assign_x()
        alpha = max(alpha_floor, alpha * (1.0 - alpha_decay))
        moved = np.sqrt((xs - px) ** 2 + (ys - py) ** 2)
        if float(moved.max(initial=0.0)) < params.convergence_epsilon:
            converged = True
            break

    # settle residual overlaps vertically so x keeps its parent-derived order
    for _ in range(300):
        worst = _resolve_collisions(xs, ys, pad_rxs, pad_rys, relax=0.8,
                                    vertical_only=True)
        if worst >= 1.0 - 1e-6:
            break

    layout_nodes = []
    for i, nid in enumerate(order):
        node = lattice.nodes[nid]
        layout_nodes.append(LayoutNode(
            node_id=nid,
            x=float(xs[i]),
            y=float(ys[i]),
            rx=float(rxs[i]),
            ry=float(rys[i]),
            size_scale=float(scales[i]),
            opacity=longtail_opacity(node.frequency, total, longtail_t),
            color=node_color(node.prompt_counts, prompt_palette),
        ))

    paths = tuple(
        (gen, tuple((float(xs[idx[nid]]), float(ys[idx[nid]]))
                    for nid in lattice.paths[gen]))
        for gen in lattice.gen_order
    )
    return LayoutResult(
        nodes=tuple(layout_nodes),
        paths=paths,
        iterations_used=iterations,
        converged=converged,
        midline=midline,
    )


def layout_to_json(result: LayoutResult, params: LayoutParams) -> dict:
    """Versioned export consumed by the SVG emitter, service, and UI."""
    return {
        "version": LAYOUT_EXPORT_VERSION,
        "params": params.to_dict(),
        "converged": result.converged,
        "iterations_used": result.iterations_used,
        "nodes": [
            {
                "id": ln.node_id,
                "x": ln.x,
                "y": ln.y,
                "rx": ln.rx,
                "ry": ln.ry,
                "size_scale": ln.size_scale,
                "opacity": ln.opacity,
                "color": list(ln.color),
                "color_hex": linear_to_hex(ln.color),
            }
            for ln in result.nodes
        ],
        "paths": [
            {"gen": gen, "points": [[x, y] for x, y in points]}
            for gen, points in result.paths
        ],
    }
