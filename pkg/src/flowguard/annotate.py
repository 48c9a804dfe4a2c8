"""Overlay rendering for frame records: flow arrows, FOE marker, the TTC
grid, the left/right split and the balance readout."""
from __future__ import annotations

import math

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .flow import arrow_endpoint
from .imageops import GrayscaleImage

SCALE = 4
ARROW_GAIN = 4.0
ARROW_HEAD = 3.0
FOE_RADIUS = 5

GREEN = (0, 220, 0)
RED = (230, 0, 0)
GRID = (70, 90, 160)
SPLIT = (240, 200, 0)
TEXT = (255, 255, 255)


def render_overlay(frame: GrayscaleImage, record: dict, scale: int = SCALE) -> np.ndarray:
    """Draw ``record`` on top of ``frame``; returns an ``(H*scale, W*scale, 3)`` uint8 array.

    Only fields stored in the record are used, so rendering from a JSONL
    file reproduces the overlay of the original run exactly.
    """
    gray = np.round(frame.pixels * 255.0).clip(0, 255).astype(np.uint8)
    base = Image.fromarray(gray, mode="L").convert("RGB")
    w, h = base.size
    canvas = base.resize((w * scale, h * scale), Image.NEAREST)
    draw = ImageDraw.Draw(canvas)

    cells = len(record["ttc_counts"])
    for k in range(1, cells):
        x = round(k * w * scale / cells)
        y = round(k * h * scale / cells)
        draw.line([(x, 0), (x, h * scale - 1)], fill=GRID)
        draw.line([(0, y), (w * scale - 1, y)], fill=GRID)
    mid = w * scale // 2
    draw.line([(mid, 0), (mid, h * scale - 1)], fill=SPLIT, width=2)

    def px(x, y):
        return ((x + 0.5) * scale, (y + 0.5) * scale)

    for x, y, u, v in record["vectors"]:
        x2, y2 = x + ARROW_GAIN * u, y + ARROW_GAIN * v
        draw.line([px(x, y), px(x2, y2)], fill=GREEN)
        if (x2, y2) != (x, y):
            ax, ay = arrow_endpoint(x, y, x2, y2, ARROW_HEAD)
            draw.line([px(x2, y2), px(ax, ay)], fill=GREEN)

    foe = record.get("foe")
    if foe is not None and all(math.isfinite(c) for c in foe):
        cx, cy = px(*foe)
        r = FOE_RADIUS * scale / 2
        draw.ellipse([cx - r, cy - r, cx + r, cy + r], outline=RED, width=2)

    font = ImageFont.load_default()
    lines = [
        f"L {record['sum_left']:.1f}  R {record['sum_right']:.1f}",
        f"delta {record['delta']:+.3f}  {record['decision']}",
    ]
    draw.text((4, 2), "\n".join(lines), fill=TEXT, font=font)
    return np.asarray(canvas, dtype=np.uint8)
