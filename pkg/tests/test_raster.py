import json
from pathlib import Path

import numpy as np
import pytest

from gesturelog.pngio import encode_png
from gesturelog.raster import (
    DEFAULT_PALETTE,
    RasterSpec,
    RasterStyle,
    rasterize,
)
from gesturelog.skeleton import HandSkeleton

from conftest import make_random_skeleton

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture_skeleton() -> HandSkeleton:
    data = json.loads((FIXTURES / "fixture_skeleton.json").read_text())
    return HandSkeleton(np.array(data["landmarks"]), data["handedness"])


def distinct_colors(img: np.ndarray) -> set:
    return {tuple(c) for c in np.unique(img.reshape(-1, 3), axis=0)}


def test_spec_validation():
    with pytest.raises(ValueError):
        RasterSpec(width=0)
    with pytest.raises(ValueError):
        RasterSpec(node_radius=0)
    with pytest.raises(ValueError):
        RasterSpec(line_width=0)
    spec = RasterSpec(style="type2")
    assert spec.style is RasterStyle.TYPE2


def test_all_landmarks_at_center_yields_single_disc():
    spec = RasterSpec(width=224, height=224, style=RasterStyle.TYPE2)
    skel = HandSkeleton(np.tile([0.5, 0.5, 0.0], (21, 1)))
    img = rasterize(skel, spec)
    # independent pixel-set oracle: integer disc of node_radius at (112, 112)
    expected = np.zeros((224, 224), dtype=bool)
    for y in range(224):
        for x in range(224):
            if (x - 112) ** 2 + (y - 112) ** 2 <= spec.node_radius**2:
                expected[y, x] = True
    foreground = np.any(img != np.array(spec.background, dtype=np.uint8), axis=2)
    assert np.array_equal(foreground, expected)
    assert distinct_colors(img[foreground]) == {spec.tone}


def test_type2_single_foreground_color(rng):
    spec = RasterSpec(style=RasterStyle.TYPE2)
    for _ in range(20):
        img = rasterize(make_random_skeleton(rng), spec)
        colors = distinct_colors(img)
        colors.discard(spec.background)
        assert colors == {spec.tone}


def test_type1_color_budget(rng):
    spec = RasterSpec(style=RasterStyle.TYPE1)
    for _ in range(20):
        img = rasterize(make_random_skeleton(rng), spec)
        colors = distinct_colors(img)
        colors.discard(spec.background)
        assert colors <= set(DEFAULT_PALETTE.values())


def test_rasterize_deterministic(rng):
    skel = make_random_skeleton(rng)
    spec = RasterSpec(style=RasterStyle.TYPE1)
    a = rasterize(skel, spec)
    b = rasterize(skel, spec)
    assert np.array_equal(a, b)
    assert encode_png(a) == encode_png(b)


@pytest.mark.parametrize("style,golden", [
    (RasterStyle.TYPE1, "golden_type1.png"),
    (RasterStyle.TYPE2, "golden_type2.png"),
])
def test_golden_png_match(style, golden):
    img = rasterize(load_fixture_skeleton(), RasterSpec(style=style))
    assert encode_png(img) == (FIXTURES / golden).read_bytes()


def test_golden_decodes_with_independent_reader():
    # cross-check our PNG writer against Pillow's decoder
    PIL_Image = pytest.importorskip("PIL.Image").open
    img = rasterize(load_fixture_skeleton(), RasterSpec(style=RasterStyle.TYPE1))
    decoded = np.asarray(PIL_Image(FIXTURES / "golden_type1.png").convert("RGB"))
    assert np.array_equal(decoded, img)


def test_out_of_frame_landmarks_are_clamped(rng):
    spec = RasterSpec(style=RasterStyle.TYPE2)
    # everything far to the left: foreground must hug the x=0 border,
    # never wrap around to the right edge
    pts = np.tile([-5.0, 0.5, 0.0], (21, 1))
    img = rasterize(HandSkeleton(pts), spec)
    foreground_cols = np.where(np.any(img != 0, axis=(0, 2)))[0]
    assert foreground_cols.size > 0
    assert foreground_cols.max() <= spec.node_radius


def test_clamping_fuzz_never_fails(rng):
    spec = RasterSpec(width=64, height=48, style=RasterStyle.TYPE1)
    for _ in range(100):
        pts = rng.uniform(-10.0, 10.0, size=(21, 3))
        img = rasterize(HandSkeleton(pts), spec)
        assert img.shape == (48, 64, 3)
