"""Pyramidal Lucas-Kanade tracking and flow-vector construction."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from scipy import ndimage

from .errors import InvalidInputError
from .imageops import ImagePyramid

LK_WINDOW = 10
LK_LEVELS = 3
LK_MAX_ITER = 30
LK_EPS = 0.01
LK_MAX_RESIDUAL = 0.08
MIN_FLOW_SQ = 0.01
MIN_EIGENVALUE = 1e-6
LK_FB_MAX = 0.5


@dataclass(frozen=True)
class FlowVector:
    """Motion of one tracked point: previous position ``(x, y)`` plus
    per-frame displacement ``(u, v)``."""

    x: float
    y: float
    u: float
    v: float

    @property
    def p(self):
        return (self.x, self.y)

    @property
    def d(self):
        return (self.u, self.v)


@dataclass(frozen=True)
class TrackResult:
    found: bool
    next: tuple
    residual: float


def _bspline_weights(t: np.ndarray, deriv: bool = False) -> np.ndarray:
    """Cubic B-spline taps for offsets -1..2 around ``floor``; shape (N, 4)."""
    t = t[:, None]
    if deriv:
        return np.hstack([-(1 - t) ** 2 / 2, (3 * t ** 2 - 4 * t) / 2,
                          (-3 * t ** 2 + 2 * t + 1) / 2, t ** 2 / 2])
    return np.hstack([(1 - t) ** 3 / 6, (3 * t ** 3 - 6 * t ** 2 + 4) / 6,
                      (-3 * t ** 3 + 3 * t ** 2 + 3 * t + 1) / 6, t ** 3 / 6])


class _SplineImage:
    """Cubic B-spline interpolant of one pyramid level.

    Windows are sampled as ``(2r+1)^2`` grids shifted by one sub-pixel offset
    per point, so interpolation is separable: a gathered coefficient patch is
    filtered by four taps along each axis.
    """

    def __init__(self, img: np.ndarray, radius: int):
        self.radius = radius
        self.margin = radius + 3
        coeffs = ndimage.spline_filter(img, order=3, mode="mirror")
        self.coeffs = np.pad(coeffs, self.margin, mode="edge")
        self.shape = img.shape
        size = 2 * radius + 4
        self._steps = np.arange(size)

    def windows(self, cx: np.ndarray, cy: np.ndarray, grad: bool = False):
        """Sample windows centred at ``(cx, cy)``; returns values (and
        x/y derivatives when ``grad``) each shaped ``(N, side*side)``."""
        r = self.radius
        side = 2 * r + 1
        hp, wp = self.coeffs.shape
        fx = np.floor(cx)
        fy = np.floor(cy)
        tx = cx - fx
        ty = cy - fy
        base_x = fx.astype(np.intp) - r - 1 + self.margin
        base_y = fy.astype(np.intp) - r - 1 + self.margin
        cols = np.clip(base_x[:, None] + self._steps, 0, wp - 1)
        rows = np.clip(base_y[:, None] + self._steps, 0, hp - 1)
        patch = self.coeffs[rows[:, :, None], cols[:, None, :]]

        def along_x(wts):
            return sum(wts[:, k, None, None] * patch[:, :, k:k + side] for k in range(4))

        def along_y(arr, wts):
            out = sum(wts[:, k, None, None] * arr[:, k:k + side, :] for k in range(4))
            return out.reshape(len(cx), side * side)

        wx = _bspline_weights(tx)
        wy = _bspline_weights(ty)
        xs = along_x(wx)
        val = along_y(xs, wy)
        if not grad:
            return val
        gy = along_y(xs, _bspline_weights(ty, deriv=True))
        gx = along_y(along_x(_bspline_weights(tx, deriv=True)), wy)
        return val, gx, gy


def _inside(cx, cy, ox, oy, w, h) -> np.ndarray:
    """1.0 where window pixel ``(cx + ox, cy + oy)`` lies in a ``w x h`` frame."""
    wx = cx[:, None] + ox
    wy = cy[:, None] + oy
    return ((wx >= 0) & (wx <= w - 1) & (wy >= 0) & (wy <= h - 1)).astype(np.float64)


def lucas_kanade_track(prev: ImagePyramid, next: ImagePyramid, points, window: int = LK_WINDOW,
                       max_iter: int = LK_MAX_ITER, eps: float = LK_EPS,
                       max_residual: float = LK_MAX_RESIDUAL) -> list[TrackResult]:
    """Track ``points`` (sequence of ``(x, y)``) from ``prev`` into ``next``.

    All points are solved together, one vectorized 2x2 system per point and
    iteration, with cubic-spline sub-pixel sampling. Window pixels falling
    outside the frame are excluded from the sums. Points whose structure
    tensor is near-singular, whose estimate leaves the frame, or whose final
    window residual exceeds ``max_residual`` come back with ``found=False``.
    """
    if len(prev) != len(next):
        raise InvalidInputError(f"pyramid depth mismatch: {len(prev)} vs {len(next)}")
    for a, b in zip(prev.levels, next.levels):
        if a.pixels.shape != b.pixels.shape:
            raise InvalidInputError("pyramids were built from frames of different size")
    if window < 2:
        raise InvalidInputError(f"window half-size must be >= 2, got {window}")

    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if n == 0:
        return []

    offs = np.arange(-window, window + 1, dtype=np.float64)
    ox, oy = np.meshgrid(offs, offs)
    ox = ox.reshape(1, -1)
    oy = oy.reshape(1, -1)

    ok = np.ones(n, dtype=bool)
    guess = np.zeros((n, 2))
    residual = np.full(n, np.inf)
    for level in range(len(prev) - 1, -1, -1):
        scale = 2.0 ** level
        h, w = prev[level].pixels.shape
        sI = _SplineImage(prev[level].pixels, window)
        sJ = _SplineImage(next[level].pixels, window)
        p = pts / scale
        inside = _inside(p[:, 0], p[:, 1], ox, oy, w, h)
        count = np.maximum(inside.sum(axis=1), 1.0)
        T, Ix, Iy = sI.windows(p[:, 0], p[:, 1], grad=True)
        Ix = Ix * inside
        Iy = Iy * inside
        gxx = (Ix * Ix).sum(axis=1)
        gxy = (Ix * Iy).sum(axis=1)
        gyy = (Iy * Iy).sum(axis=1)
        tr = (gxx + gyy) / count
        det_term = np.sqrt(((gxx - gyy) / count) ** 2 + 4 * (gxy / count) ** 2)
        min_eig = 0.5 * (tr - det_term)
        ok &= min_eig >= MIN_EIGENVALUE
        safe = ok & (gxx * gyy - gxy * gxy > 0)

        nu = np.zeros((n, 2))
        active = safe.copy()
        for _ in range(max_iter):
            if not active.any():
                break
            idx = np.nonzero(active)[0]
            qx = p[idx, 0] + guess[idx, 0] + nu[idx, 0]
            qy = p[idx, 1] + guess[idx, 1] + nu[idx, 1]
            # only pixels inside the frame in both windows take part
            m = inside[idx] * _inside(qx, qy, ox, oy, w, h)
            diff = (T[idx] - sJ.windows(qx, qy)) * m
            jx = Ix[idx] * m
            jy = Iy[idx] * m
            axx = (jx * Ix[idx]).sum(axis=1)
            axy = (jx * Iy[idx]).sum(axis=1)
            ayy = (jy * Iy[idx]).sum(axis=1)
            bx = (diff * Ix[idx]).sum(axis=1)
            by = (diff * Iy[idx]).sum(axis=1)
            dd = axx * ayy - axy * axy
            with np.errstate(divide="ignore", invalid="ignore"):
                ex = (ayy * bx - axy * by) / dd
                ey = (axx * by - axy * bx) / dd
            nu[idx, 0] += ex
            nu[idx, 1] += ey
            step = np.hypot(ex, ey)
            bad = ~np.isfinite(step) | (np.abs(nu[idx]).max(axis=1) > 2 * max(w, h))
            ok[idx[bad]] = False
            active[idx[(step < eps) | bad]] = False

        est = guess + nu
        if level == 0:
            good = np.all(np.isfinite(est), axis=1)
            est = np.where(good[:, None], est, 0.0)
            ok &= good
            qx = p[:, 0] + est[:, 0]
            qy = p[:, 1] + est[:, 1]
            m = inside * _inside(qx, qy, ox, oy, w, h)
            absdiff = np.abs(T - sJ.windows(qx, qy)) * m
            residual = absdiff.sum(axis=1) / np.maximum(m.sum(axis=1), 1.0)
            guess = est
        else:
            guess = 2.0 * est

    nxt = pts + guess
    h0, w0 = prev[0].pixels.shape
    in_frame = (nxt[:, 0] >= 0) & (nxt[:, 0] <= w0 - 1) & (nxt[:, 1] >= 0) & (nxt[:, 1] <= h0 - 1)
    found = ok & in_frame & (residual <= max_residual)
    return [TrackResult(bool(found[i]), (float(nxt[i, 0]), float(nxt[i, 1])), float(residual[i]))
            for i in range(n)]


def track_checked(prev: ImagePyramid, next: ImagePyramid, points, fb_max: float | None = LK_FB_MAX,
                  **lk_args) -> list[TrackResult]:
    """Forward tracking followed by a backward pass from the found points.

    A point whose backward track lands more than ``fb_max`` pixels from
    where it started is marked not found. ``fb_max=None`` skips the check.
    """
    fwd = lucas_kanade_track(prev, next, points, **lk_args)
    if fb_max is None or not fwd:
        return fwd
    idx = [i for i, r in enumerate(fwd) if r.found]
    if not idx:
        return fwd
    back = lucas_kanade_track(next, prev, [fwd[i].next for i in idx], **lk_args)
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    out = list(fwd)
    for i, b in zip(idx, back):
        err = math.hypot(b.next[0] - pts[i, 0], b.next[1] - pts[i, 1])
        if not b.found or err > fb_max:
            out[i] = TrackResult(False, fwd[i].next, fwd[i].residual)
    return out


def make_flow_vectors(points, track: list[TrackResult], min_flow_sq: float = MIN_FLOW_SQ) -> list[FlowVector]:
    """Keep found points and drop displacements below the motion floor."""
    points = list(points)
    if len(points) != len(track):
        raise InvalidInputError(f"{len(points)} points but {len(track)} track results")
    out = []
    for (x, y), r in zip(points, track):
        if not r.found:
            continue
        u = r.next[0] - x
        v = r.next[1] - y
        if u * u + v * v < min_flow_sq:
            continue
        out.append(FlowVector(float(x), float(y), float(u), float(v)))
    return out


def arrow_endpoint(x1, y1, x2, y2, length):
    """Arrow tip for an annotation arrow drawn from ``(x1, y1)`` to ``(x2, y2)``.

    The angle is the arctangent of dx over dy (quadrant-aware) and a
    constant ``3.14 / 180`` is added before projecting ``length`` from the
    end point. This reproduces the original drawing convention as is.
    """
    if x1 == x2 and y1 == y2:
        raise InvalidInputError("arrow endpoints coincide")
    angle = math.atan2(x2 - x1, y2 - y1)
    return (x2 + length * math.cos(angle + 3.14 / 180),
            y2 + length * math.sin(angle + 3.14 / 180))
