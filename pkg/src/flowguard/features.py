"""FAST segment-test corners and the corner refresh policy."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .imageops import GrayscaleImage

# Bresenham circle of radius 3, clockwise from 12 o'clock, as (dx, dy)
CIRCLE = (
    (0, -3), (1, -3), (2, -2), (3, -1),
    (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1),
    (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)

FAST_THRESHOLD = 0.1
FAST_ARC = 9
MAX_CORNERS = 400
REFRESH_PERIOD = 50
MIN_TRACKED = 20


@dataclass(frozen=True, order=True)
class Corner:
    x: int
    y: int
    score: float


def _check_params(t, n):
    if not (0 < t < 1):
        raise InvalidParameterError(f"threshold t must lie in (0, 1), got {t}")
    if int(n) != n or not 9 <= n <= 16:
        raise InvalidParameterError(f"arc length n must be an integer in 9..16, got {n}")


def segment_test(img: GrayscaleImage, t: float = FAST_THRESHOLD, n: int = FAST_ARC) -> np.ndarray:
    """Corner score for every pixel; 0 where the segment test fails.

    The score is the thresholded absolute difference summed over circle
    pixels of the qualifying polarity (the larger one if both qualify).
    """
    _check_params(t, n)
    a = img.pixels
    h, w = a.shape
    if h < 7 or w < 7:
        raise InvalidInputError(f"FAST needs at least 7x7 pixels, got {w}x{h}")
    center = a[3:h - 3, 3:w - 3]
    ring = np.stack([a[3 + dy:h - 3 + dy, 3 + dx:w - 3 + dx] for dx, dy in CIRCLE])
    bright = ring > center + t
    dark = ring < center - t

    def has_arc(mask):
        wrapped = np.concatenate([mask, mask[:n - 1]]).astype(np.int16)
        csum = np.concatenate([np.zeros((1,) + mask.shape[1:], np.int16), np.cumsum(wrapped, axis=0)])
        runs = csum[n:n + 16] - csum[0:16]
        return np.any(runs == n, axis=0)

    diff = np.abs(ring - center) - t
    bright_score = np.where(bright, diff, 0.0).sum(axis=0)
    dark_score = np.where(dark, diff, 0.0).sum(axis=0)
    bright_ok = has_arc(bright)
    dark_ok = has_arc(dark)
    score = np.maximum(np.where(bright_ok, bright_score, 0.0), np.where(dark_ok, dark_score, 0.0))
    out = np.zeros_like(a)
    out[3:h - 3, 3:w - 3] = score
    return out


def _nonmax(score: np.ndarray) -> np.ndarray:
    """Local maxima over the 8-neighbourhood.

    Ties are broken toward the neighbour first in raster order, so a plateau
    of equal scores keeps one pixel instead of none.
    """
    h, w = score.shape
    p = np.pad(score, 1, mode="constant", constant_values=0.0)
    keep = score > 0
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            nb = p[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
            earlier = dy < 0 or (dy == 0 and dx < 0)
            keep &= (score > nb) if earlier else (score >= nb)
    return keep


def fast_detect(img: GrayscaleImage, t: float = FAST_THRESHOLD, n: int = FAST_ARC,
                nonmax: bool = True, max_corners: int | None = MAX_CORNERS) -> list[Corner]:
    """Detect FAST-n corners.

    Results are ordered by descending score, then y, then x, and capped at
    ``max_corners`` (``None`` disables the cap).
    """
    score = segment_test(img, t, n)
    mask = _nonmax(score) if nonmax else score > 0
    ys, xs = np.nonzero(mask)
    vals = score[ys, xs]
    order = np.lexsort((xs, ys, -vals))
    if max_corners is not None:
        order = order[:max_corners]
    return [Corner(int(xs[i]), int(ys[i]), float(vals[i])) for i in order]


def should_refresh(iteration: int, tracked: int | None = None, period: int = REFRESH_PERIOD,
                   min_tracked: int = MIN_TRACKED) -> bool:
    """Whether corners should be re-detected on this frame.

    Detection runs every ``period`` iterations, and also whenever fewer
    than ``min_tracked`` corners survive tracking (``min_tracked=0`` keeps
    the purely periodic policy).
    """
    if iteration < 0:
        raise InvalidParameterError("iteration must be >= 0")
    if iteration % period == 0:
        return True
    return tracked is not None and tracked < min_tracked
