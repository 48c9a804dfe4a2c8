"""Synthetic pinhole-camera scenes with closed-form FOE and TTC.

The camera translates with a constant velocity per frame while looking down
+Z. Obstacles are fronto-parallel rectangles covered in random dots; a far
plane closes the scene. World units are arbitrary, only ``Z / Vz`` matters.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import SceneExpiredError
from .flow import FlowVector
from .imageops import GrayscaleImage, blur_array
from .netpbm import save_image

MIN_DEPTH = 0.1
DOT_SIZE = 2.0


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Velocity(_Model):
    vx: float = 0.0
    vy: float = 0.0
    vz: float = Field(gt=0)


class Obstacle(_Model):
    center: tuple[float, float, float]
    extent: tuple[float, float]
    seed: int = 0
    dots: int = Field(default=300, ge=50)

    @model_validator(mode="after")
    def _check(self):
        if self.center[2] <= 0:
            raise ValueError("obstacle depth Z0 must be > 0")
        if self.extent[0] <= 0 or self.extent[1] <= 0:
            raise ValueError("obstacle extent must be positive")
        return self


class SyntheticScene(_Model):
    focal: float = Field(gt=0)
    principal: tuple[float, float]
    width: int = Field(ge=16)
    height: int = Field(ge=16)
    velocity: Velocity
    obstacles: list[Obstacle] = []
    background_depth: float = Field(gt=0)
    background_dots: int = Field(default=0, ge=0)
    ground_level: float = Field(default=0.5, ge=0, le=1)
    background_level: float = Field(default=0.4, ge=0, le=1)
    dot_level: float = Field(default=1.0, ge=0, le=1)
    psf_sigma: float = Field(default=0.8, ge=0)
    noise_sigma: float = Field(default=0.0, ge=0)
    seed: int = 0

    @model_validator(mode="after")
    def _check(self):
        if self.obstacles and self.background_depth <= max(o.center[2] for o in self.obstacles):
            raise ValueError("background_depth must exceed every obstacle depth")
        return self


def depth_at(z0: float, scene: SyntheticScene, t: float) -> float:
    return z0 - t * scene.velocity.vz


def project(scene: SyntheticScene, X, Y, z0, t):
    """Image coordinates at frame ``t`` of world points given at t=0."""
    Z = z0 - t * scene.velocity.vz
    cx, cy = scene.principal
    u = cx + scene.focal * (np.asarray(X) - t * scene.velocity.vx) / Z
    v = cy + scene.focal * (np.asarray(Y) - t * scene.velocity.vy) / Z
    return u, v


def ground_truth_foe(scene: SyntheticScene) -> tuple[float, float]:
    vel = scene.velocity
    cx, cy = scene.principal
    return (cx + scene.focal * vel.vx / vel.vz, cy + scene.focal * vel.vy / vel.vz)


def _check_alive(scene: SyntheticScene, t: float, index: int | None = None):
    items = range(len(scene.obstacles)) if index is None else [index]
    for i in items:
        z = depth_at(scene.obstacles[i].center[2], scene, t)
        if z <= MIN_DEPTH:
            raise SceneExpiredError(f"camera reached obstacle {i} at frame {t} (depth {z:.3f})")
    if index is None and depth_at(scene.background_depth, scene, t) <= MIN_DEPTH:
        raise SceneExpiredError(f"camera reached the background plane at frame {t}")


def ground_truth_ttc(scene: SyntheticScene, t: float, index: int) -> float:
    _check_alive(scene, t, index)
    ob = scene.obstacles[index]
    return depth_at(ob.center[2], scene, t) / scene.velocity.vz


def obstacle_bbox(scene: SyntheticScene, t: float, index: int) -> tuple[float, float, float, float]:
    """Projected ``(x_min, y_min, x_max, y_max)``, not clipped to the frame."""
    ob = scene.obstacles[index]
    X, Y, z0 = ob.center
    W, H = ob.extent
    x0, y0 = project(scene, X - W / 2, Y - H / 2, z0, t)
    x1, y1 = project(scene, X + W / 2, Y + H / 2, z0, t)
    return (float(x0), float(y0), float(x1), float(y1))


def obstacle_dots(scene: SyntheticScene, index: int) -> np.ndarray:
    """World ``(X, Y)`` of every texture dot on an obstacle."""
    ob = scene.obstacles[index]
    rng = np.random.default_rng(ob.seed)
    X, Y, _ = ob.center
    W, H = ob.extent
    pts = rng.uniform(-0.5, 0.5, size=(ob.dots, 2)) * (W, H)
    return pts + (X, Y)


def background_dots(scene: SyntheticScene) -> np.ndarray:
    """World ``(X, Y)`` of background dots, spread over the initial view."""
    if scene.background_dots == 0:
        return np.zeros((0, 2))
    rng = np.random.default_rng([scene.seed, 1])
    uv = rng.uniform((0, 0), (scene.width, scene.height), size=(scene.background_dots, 2))
    cx, cy = scene.principal
    z = scene.background_depth
    return np.column_stack([(uv[:, 0] - cx) * z / scene.focal, (uv[:, 1] - cy) * z / scene.focal])


def _coverage_1d(lo: float, hi: float, n: int) -> np.ndarray:
    """Fraction of each pixel (centred on integers) inside ``[lo, hi]``."""
    i = np.arange(n, dtype=np.float64)
    return np.clip(np.minimum(hi, i + 0.5) - np.maximum(lo, i - 0.5), 0.0, 1.0)


def _splat_dots(shape, u, v, clip) -> np.ndarray:
    """Accumulated area coverage of 2x2 squares centred at ``(u, v)``."""
    h, w = shape
    acc = np.zeros(shape)
    if len(u) == 0:
        return acc
    x0, y0, x1, y1 = clip
    half = DOT_SIZE / 2
    ax = np.maximum(u - half, x0)
    bx = np.minimum(u + half, x1)
    ay = np.maximum(v - half, y0)
    by = np.minimum(v + half, y1)
    keep = (bx > ax) & (by > ay)
    ax, bx, ay, by = ax[keep], bx[keep], ay[keep], by[keep]
    steps = np.arange(4)
    cols = np.floor(ax + 0.5).astype(np.intp)[:, None] + steps
    rows = np.floor(ay + 0.5).astype(np.intp)[:, None] + steps
    cx = np.clip(np.minimum(bx[:, None], cols + 0.5) - np.maximum(ax[:, None], cols - 0.5), 0, 1)
    cy = np.clip(np.minimum(by[:, None], rows + 0.5) - np.maximum(ay[:, None], rows - 0.5), 0, 1)
    vals = cy[:, :, None] * cx[:, None, :]
    rr = np.broadcast_to(rows[:, :, None], vals.shape)
    cc = np.broadcast_to(cols[:, None, :], vals.shape)
    ok = (vals > 0) & (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
    np.add.at(acc, (rr[ok], cc[ok]), vals[ok])
    return acc


def render_frame(scene: SyntheticScene, t: int) -> GrayscaleImage:
    _check_alive(scene, t)
    shape = (scene.height, scene.width)
    inf = float("inf")

    bg = background_dots(scene)
    u, v = project(scene, bg[:, 0], bg[:, 1], scene.background_depth, t)
    cover = np.minimum(_splat_dots(shape, u, v, (-inf, -inf, inf, inf)), 1.0)
    img = scene.background_level + (scene.dot_level - scene.background_level) * cover

    order = sorted(range(len(scene.obstacles)), key=lambda i: -depth_at(scene.obstacles[i].center[2], scene, t))
    for i in order:
        ob = scene.obstacles[i]
        box = obstacle_bbox(scene, t, i)
        alpha = np.outer(_coverage_1d(box[1], box[3], scene.height), _coverage_1d(box[0], box[2], scene.width))
        if not alpha.any():
            continue
        dots = obstacle_dots(scene, i)
        u, v = project(scene, dots[:, 0], dots[:, 1], ob.center[2], t)
        cover = np.minimum(_splat_dots(shape, u, v, box), 1.0)
        layer = scene.ground_level + (scene.dot_level - scene.ground_level) * cover
        img = img * (1.0 - alpha) + layer * alpha

    if scene.psf_sigma > 0:
        img = blur_array(img, scene.psf_sigma)
    if scene.noise_sigma > 0:
        rng = np.random.default_rng([scene.seed, 2, t])
        img = img + rng.normal(0.0, scene.noise_sigma, size=shape)
    return GrayscaleImage(np.clip(img, 0.0, 1.0))


def exact_flow(scene: SyntheticScene, t: int, index: int, visible_only: bool = True) -> list[FlowVector]:
    """Analytic flow of an obstacle's dots between frames ``t-1`` and ``t``.

    The previous position is the dot's projection at ``t-1``.
    """
    _check_alive(scene, t, index)
    ob = scene.obstacles[index]
    dots = obstacle_dots(scene, index)
    u0, v0 = project(scene, dots[:, 0], dots[:, 1], ob.center[2], t - 1)
    u1, v1 = project(scene, dots[:, 0], dots[:, 1], ob.center[2], t)
    keep = np.ones(len(dots), dtype=bool)
    if visible_only:
        for uu, vv in ((u0, v0), (u1, v1)):
            keep &= (uu >= 0) & (uu <= scene.width - 1) & (vv >= 0) & (vv <= scene.height - 1)
    return [FlowVector(float(a), float(b), float(c - a), float(d - b))
            for a, b, c, d, k in zip(u0, v0, u1, v1, keep) if k]


def frame_record(scene: SyntheticScene, t: int) -> dict:
    foe = ground_truth_foe(scene)
    obstacles = []
    for i in range(len(scene.obstacles)):
        obstacles.append({
            "id": i,
            "ttc_frames": ground_truth_ttc(scene, t, i),
            "bbox_px": list(obstacle_bbox(scene, t, i)),
        })
    return {"index": t, "foe": [foe[0], foe[1]], "obstacles": obstacles}


def generate_sequence(scene: SyntheticScene, n_frames: int, out_dir) -> dict:
    """Render ``n_frames`` PGM frames plus ``manifest.json`` into ``out_dir``.

    The whole sequence is validated before anything is written.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    _check_alive(scene, n_frames - 1)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    for t in range(n_frames):
        save_image(render_frame(scene, t), out / f"frame_{t:05d}.pgm")
        records.append(frame_record(scene, t))
    manifest = {"scene": scene.model_dump(mode="json"), "frames": records}
    with open(os.fspath(out / "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    return manifest


def load_scene(path) -> SyntheticScene:
    with open(path) as fh:
        return SyntheticScene.model_validate(json.load(fh))

