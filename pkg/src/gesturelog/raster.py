"""Deterministic skeleton rasterization: the two preprocessing image styles.

All drawing is integer-only (midpoint lines with square caps, filled integer
discs) so identical inputs produce byte-identical images on any platform.
No anti-aliasing by design.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .skeleton import HAND_EDGES, HandSkeleton

Color = tuple[int, int, int]


class RasterStyle(enum.Enum):
    TYPE1 = "type1"  # per-finger palette
    TYPE2 = "type2"  # single tone for every node and edge


# Type1 palette: wrist/palm plus one hue per finger chain.
DEFAULT_PALETTE: dict[str, Color] = {
    "palm": (200, 200, 200),
    "thumb": (228, 64, 64),
    "index": (64, 200, 84),
    "middle": (64, 128, 255),
    "ring": (240, 176, 32),
    "pinky": (212, 64, 212),
}

DEFAULT_TONE: Color = (255, 255, 255)
DEFAULT_BACKGROUND: Color = (0, 0, 0)

_PALM_EDGES = {(0, 1), (0, 5), (5, 9), (9, 13), (13, 17), (0, 17)}


def _node_group(index: int) -> str:
    if index == 0:
        return "palm"
    return ("thumb", "index", "middle", "ring", "pinky")[(index - 1) // 4]


def _edge_group(edge: tuple[int, int]) -> str:
    if edge in _PALM_EDGES:
        return "palm"
    return _node_group(max(edge))


@dataclass(frozen=True)
class RasterSpec:
    width: int = 224
    height: int = 224
    node_radius: int = 4
    line_width: int = 2
    style: RasterStyle = RasterStyle.TYPE2
    background: Color = DEFAULT_BACKGROUND
    palette: dict[str, Color] = field(default_factory=lambda: dict(DEFAULT_PALETTE))
    tone: Color = DEFAULT_TONE

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("canvas dimensions must be positive")
        if self.node_radius < 1 or self.line_width < 1:
            raise ValueError("node_radius and line_width must be >= 1")
        if not isinstance(self.style, RasterStyle):
            object.__setattr__(self, "style", RasterStyle(self.style))
        missing = set(DEFAULT_PALETTE) - set(self.palette)
        if self.style is RasterStyle.TYPE1 and missing:
            raise ValueError(f"palette missing groups: {sorted(missing)}")


def _round_half_away(v: float) -> int:
    # round() would round halves to even; golden files depend on this rule
    return math.floor(v + 0.5) if v >= 0 else math.ceil(v - 0.5)


def _to_pixel(x: float, y: float, spec: RasterSpec) -> tuple[int, int]:
    px = _round_half_away(x * (spec.width - 1))
    py = _round_half_away(y * (spec.height - 1))
    return (
        min(max(px, 0), spec.width - 1),
        min(max(py, 0), spec.height - 1),
    )


def _stamp_square(img: np.ndarray, cx: int, cy: int, half_lo: int, half_hi: int, color) -> None:
    h, w = img.shape[:2]
    x0 = max(cx + half_lo, 0)
    x1 = min(cx + half_hi, w - 1)
    y0 = max(cy + half_lo, 0)
    y1 = min(cy + half_hi, h - 1)
    if x0 <= x1 and y0 <= y1:
        img[y0 : y1 + 1, x0 : x1 + 1] = color


def _draw_line(img: np.ndarray, p0: tuple[int, int], p1: tuple[int, int], width: int, color) -> None:
    """Midpoint line from p0 to p1, each step stamped as a width x width square."""
    half_lo = -((width - 1) // 2)
    half_hi = width // 2
    x0, y0 = p0
    x1, y1 = p1
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        _stamp_square(img, x0, y0, half_lo, half_hi, color)
        if x0 == x1 and y0 == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def _draw_disc(img: np.ndarray, cx: int, cy: int, radius: int, color) -> None:
    h, w = img.shape[:2]
    r2 = radius * radius
    for dy in range(-radius, radius + 1):
        y = cy + dy
        if y < 0 or y >= h:
            continue
        span = int(math.isqrt(r2 - dy * dy))
        x0 = max(cx - span, 0)
        x1 = min(cx + span, w - 1)
        if x0 <= x1:
            img[y, x0 : x1 + 1] = color


def rasterize(skeleton: HandSkeleton, spec: RasterSpec) -> np.ndarray:
    """Render a skeleton as an (height, width, 3) uint8 RGB image.

    Edges are drawn first, nodes on top as filled discs. Landmark (x, y)
    maps to pixel (round(x*(w-1)), round(y*(h-1))), clamped to the canvas,
    with round-half-away-from-zero rounding.
    """
    img = np.empty((spec.height, spec.width, 3), dtype=np.uint8)
    img[:, :] = spec.background
    pixels = [_to_pixel(x, y, spec) for x, y, _ in skeleton.landmarks]
    single_tone = spec.style is RasterStyle.TYPE2
    for edge in HAND_EDGES:
        color = spec.tone if single_tone else spec.palette[_edge_group(edge)]
        _draw_line(img, pixels[edge[0]], pixels[edge[1]], spec.line_width, color)
    for i, (px, py) in enumerate(pixels):
        color = spec.tone if single_tone else spec.palette[_node_group(i)]
        _draw_disc(img, px, py, spec.node_radius, color)
    return img
