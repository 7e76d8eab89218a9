"""SVG rendering of a laid-out lattice: per-generation strokes + ellipses.

Output is byte-stable for identical inputs: coordinates are formatted with
fixed precision and elements are emitted in lattice order. Each generation
is drawn as its own polyline, so stacked strokes read as thickness where
many generations share a transition.
"""

from __future__ import annotations

from typing import Mapping
from xml.sax.saxutils import escape

from .colors import linear_to_hex, palette_color
from .lattice import TokenLattice
from .layout import LayoutResult

STROKE_WIDTH = 1.6
STROKE_OPACITY = 0.35
MARGIN = 24.0
MAX_LABEL_CHARS = 28


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def render_svg(lattice: TokenLattice, result: LayoutResult,
               prompt_palette: Mapping[str, str] | None = None,
               deemphasized_generations: set[str] | None = None) -> str:
    """Standalone SVG document for a layout result."""
    if prompt_palette is None:
        prompt_ids = sorted({lattice.prompt_of.get(g, "prompt-0")
                             for g in lattice.gen_order}) or ["prompt-0"]
        prompt_palette = {pid: palette_color(i) for i, pid in enumerate(prompt_ids)}
    dim = deemphasized_generations or set()

    if result.nodes:
        min_x = min(n.x - n.rx for n in result.nodes) - MARGIN
        max_x = max(n.x + n.rx for n in result.nodes) + MARGIN
        min_y = min(n.y - n.ry for n in result.nodes) - MARGIN
        max_y = max(n.y + n.ry for n in result.nodes) + MARGIN
    else:
        min_x, max_x, min_y, max_y = 0.0, 100.0, 0.0, 100.0
    width = max_x - min_x
    height = max_y - min_y

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{_fmt(min_x)} {_fmt(min_y)} {_fmt(width)} {_fmt(height)}" '
        f'width="{_fmt(width)}" height="{_fmt(height)}">',
        '<rect x="%s" y="%s" width="%s" height="%s" fill="#ffffff"/>'
        % (_fmt(min_x), _fmt(min_y), _fmt(width), _fmt(height)),
    ]

    lines.append('<g fill="none" stroke-linecap="round" stroke-linejoin="round">')
    for gen, points in result.paths:
        if len(points) < 2:
            continue
        color = prompt_palette.get(lattice.prompt_of.get(gen, "prompt-0"), "#888888")
        opacity = STROKE_OPACITY * (0.25 if gen in dim else 1.0)
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        lines.append(
            f'<polyline points="{coords}" stroke="{color}" '
            f'stroke-width="{_fmt(STROKE_WIDTH)}" stroke-opacity="{_fmt(opacity)}"/>'
        )
    lines.append("</g>")

    lines.append('<g font-family="sans-serif" text-anchor="middle">')
    for ln in result.nodes:
        fill = linear_to_hex(ln.color)
        lines.append(
            f'<ellipse cx="{_fmt(ln.x)}" cy="{_fmt(ln.y)}" rx="{_fmt(ln.rx)}" '
            f'ry="{_fmt(ln.ry)}" fill="{fill}" fill-opacity="{_fmt(0.85 * ln.opacity)}" '
            f'stroke="#44444d" stroke-opacity="{_fmt(ln.opacity)}" stroke-width="0.8"/>'
        )
        label = lattice.nodes[ln.node_id].label
        if len(label) > MAX_LABEL_CHARS:
            label = label[: MAX_LABEL_CHARS - 1] + "…"
        font = 4.0 + 7.0 * ln.size_scale
        lines.append(
            f'<text x="{_fmt(ln.x)}" y="{_fmt(ln.y + font * 0.35)}" '
            f'font-size="{_fmt(font)}" fill="#1b1b22" '
            f'fill-opacity="{_fmt(ln.opacity)}">{escape(label)}</text>'
        )
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
