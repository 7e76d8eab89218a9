"""Prompt palette and linear-RGB color math.

Averaging happens in linear RGB (sRGB gamma removed) so blended node colors
sit inside the convex hull of the prompt colors instead of drifting dark.
"""

from __future__ import annotations

LinearRGB = tuple[float, float, float]

# Okabe-Ito palette: eight colorblind-safe hues in fixed assignment order.
PALETTE = (
    "#e69f00",
    "#56b4e9",
    "#009e73",
    "#f0e442",
    "#0072b2",
    "#d55e00",
    "#cc79a7",
    "#999999",
)


def _channel_to_linear(c: float) -> float:
    return c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4


def _channel_to_srgb(c: float) -> float:
    c = min(1.0, max(0.0, c))
    return 12.92 * c if c <= 0.0031308 else 1.055 * c ** (1 / 2.4) - 0.055


def hex_to_linear(color: str) -> LinearRGB:
    color = color.lstrip("#")
    r, g, b = (int(color[i : i + 2], 16) / 255.0 for i in (0, 2, 4))
    return (_channel_to_linear(r), _channel_to_linear(g), _channel_to_linear(b))


def linear_to_hex(rgb: LinearRGB) -> str:
    return "#" + "".join(
        f"{round(_channel_to_srgb(c) * 255):02x}" for c in rgb
    )


def palette_color(index: int) -> str:
    """Color for the index-th prompt; beyond eight, hues repeat lightened."""
    base = PALETTE[index % len(PALETTE)]
    rounds = index // len(PALETTE)
    if rounds == 0:
        return base
    amount = min(0.75, 0.3 * rounds)
    r, g, b = hex_to_linear(base)
    return linear_to_hex(tuple(c + (1.0 - c) * amount for c in (r, g, b)))


def blend_weighted(colors: list[LinearRGB], weights: list[float]) -> LinearRGB:
    total = sum(weights)
    if total <= 0:
        raise ValueError("weights must sum to a positive value")
    r = sum(c[0] * w for c, w in zip(colors, weights)) / total
    g = sum(c[1] * w for c, w in zip(colors, weights)) / total
    b = sum(c[2] * w for c, w in zip(colors, weights)) / total
    return (r, g, b)
