"""Hand skeleton geometry: the 21-landmark hand, normalization and feature vectors.

Coordinates are image-relative: x right, y down, nominally in [0, 1]; z is
relative depth in the same unit scale (negative toward the camera).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

NUM_LANDMARKS = 21
WRIST = 0
MIDDLE_MCP = 9

# Landmark distance below which the skeleton is considered a tracking glitch.
DEGENERATE_EPS = 1e-6

# The 21 undirected connections of the standard hand-landmark topology:
# thumb 0-1-2-3-4, index 0-5-6-7-8, middle 5-9-10-11-12, ring 9-13-14-15-16,
# pinky 13-17-18-19-20, palm closure 0-17.
HAND_EDGES: tuple[tuple[int, int], ...] = (
    (0, 1), (1, 2), (2, 3), (3, 4),
    (0, 5), (5, 6), (6, 7), (7, 8),
    (5, 9), (9, 10), (10, 11), (11, 12),
    (9, 13), (13, 14), (14, 15), (15, 16),
    (13, 17), (17, 18), (18, 19), (19, 20),
    (0, 17),
)


class Handedness(enum.Enum):
    LEFT = "Left"
    RIGHT = "Right"
    UNKNOWN = "Unknown"


class Landmark(NamedTuple):
    x: float
    y: float
    z: float


class DegenerateSkeleton(ValueError):
    """Wrist and middle-finger MCP nearly coincident; caller should drop the frame."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class HandSkeleton:
    """Exactly 21 landmarks of one detected hand plus its handedness.

    ``landmarks`` is a read-only (21, 3) float64 array; row i is landmark i
    of the standard topology (0 = wrist, 9 = middle-finger MCP).
    """

    landmarks: np.ndarray
    handedness: Handedness = Handedness.UNKNOWN

    def __post_init__(self):
        pts = np.asarray(self.landmarks, dtype=np.float64)
        if pts.shape != (NUM_LANDMARKS, 3):
            raise ValueError(
                f"expected {NUM_LANDMARKS} landmarks with 3 coordinates, got shape {pts.shape}"
            )
        if not np.all(np.isfinite(pts)):
            raise ValueError("landmark coordinates must be finite")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "landmarks", pts)
        if not isinstance(self.handedness, Handedness):
            object.__setattr__(self, "handedness", Handedness(self.handedness))

    @classmethod
    def from_points(
        cls,
        points: Sequence[Sequence[float]] | Iterable[Landmark],
        handedness: Handedness | str = Handedness.UNKNOWN,
    ) -> "HandSkeleton":
        return cls(np.asarray(list(points), dtype=np.float64), Handedness(handedness))

    def landmark(self, index: int) -> Landmark:
        x, y, z = self.landmarks[index]
        return Landmark(float(x), float(y), float(z))


def normalize(skeleton: HandSkeleton, rotate: bool = True) -> np.ndarray:
    """Map a skeleton to its 63-element pose feature vector.

    Three steps: translate the wrist to the origin, divide every coordinate
    by the wrist-to-middle-MCP distance, then rotate in the x-y plane so the
    wrist-to-middle-MCP direction points along -y (fingers up). z is scaled
    but never rotated: single-camera depth is only relatively meaningful.

    Raises DegenerateSkeleton when wrist and middle MCP are closer than
    DEGENERATE_EPS, which signals a tracking glitch rather than a pose.
    """
    pts = skeleton.landmarks - skeleton.landmarks[WRIST]
    scale = float(np.linalg.norm(pts[MIDDLE_MCP]))
    if scale < DEGENERATE_EPS:
        raise DegenerateSkeleton(
            f"wrist to middle-MCP distance {scale:.3e} below {DEGENERATE_EPS:.0e}"
        )
    pts = pts / scale
    if rotate:
        vx = float(pts[MIDDLE_MCP, 0])
        vy = float(pts[MIDDLE_MCP, 1])
        r = math.hypot(vx, vy)
        # r ~ 0 means the hand points straight at the camera; the in-plane
        # direction is undefined, so leave the frame unrotated.
        if r > 1e-12:
            sin_t = -vx / r
            cos_t = -vy / r
            x = pts[:, 0].copy()
            y = pts[:, 1].copy()
            pts[:, 0] = cos_t * x - sin_t * y
            pts[:, 1] = sin_t * x + cos_t * y
    return pts.reshape(-1)


def featurize_batch(skeletons: Sequence[HandSkeleton], rotate: bool = True) -> np.ndarray:
    """Stack normalize() over a list of skeletons into an (n, 63) matrix.

    A DegenerateSkeleton raised for item i is re-raised carrying that index.
    """
    out = np.empty((len(skeletons), NUM_LANDMARKS * 3), dtype=np.float64)
    for i, skel in enumerate(skeletons):
        try:
            out[i] = normalize(skel, rotate=rotate)
        except DegenerateSkeleton as exc:
            raise DegenerateSkeleton(f"skeleton {i}: {exc}", index=i) from None
    return out
