"""Frame-by-frame obstacle avoidance: corners, flow, FOE, TTC grid, balance,
decision. One ``FrameRecord`` is produced per consecutive frame pair."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import controller
from .config import PipelineConfig
from .errors import DegenerateGeometryError, InsufficientDataError
from .features import fast_detect, should_refresh
from .flow import FlowVector, make_flow_vectors, track_checked
from .foe_ttc import FocusOfExpansion, accumulate_grid, estimate_foe, grid_means, ttc_of_vectors
from .imageops import GrayscaleImage, build_pyramid

log = logging.getLogger(__name__)

STAGES = ("detection", "flow", "foe", "ttc", "balance", "decision")


def _grid_list(arr, as_int=False):
    if as_int:
        return [[int(v) for v in row] for row in arr]
    return [[None if math.isnan(v) else float(v) for v in row] for row in arr]


@dataclass
class FrameRecord:
    index: int
    frame: str | None
    refreshed: bool
    corner_count: int
    flow_vector_count: int
    foe: list | None
    foe_reason: str | None
    residual_rms: float | None
    ttc_sums: list
    ttc_counts: list
    ttc_means: list
    sum_left: float
    sum_right: float
    delta: float
    decision: str
    timing_ms: dict
    vectors: list = field(default_factory=list)
    ttc_means_s: list | None = None

    def to_dict(self) -> dict:
        out = {
            "index": self.index,
            "frame": self.frame,
            "refreshed": self.refreshed,
            "corner_count": self.corner_count,
            "flow_vector_count": self.flow_vector_count,
            "foe": self.foe,
            "foe_reason": self.foe_reason,
            "residual_rms": self.residual_rms,
            "ttc_sums": self.ttc_sums,
            "ttc_counts": self.ttc_counts,
            "ttc_means": self.ttc_means,
        }
        if self.ttc_means_s is not None:
            out["ttc_means_s"] = self.ttc_means_s
        out.update({
            "sum_left": self.sum_left,
            "sum_right": self.sum_right,
            "delta": self.delta,
            "decision": self.decision,
            "timing_ms": self.timing_ms,
            "vectors": self.vectors,
        })
        return out


class _Clock:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.times = {s: None for s in STAGES}
        self._t = time.perf_counter()

    def lap(self, stage: str):
        now = time.perf_counter()
        if self.enabled:
            self.times[stage] = round((now - self._t) * 1000.0, 3)
        self._t = now


class Pipeline:
    """Stateful processor; feed frames in temporal order.

    ``record_timing`` fills ``timing_ms``; it is off by default so that
    repeated runs serialize identically.
    """

    def __init__(self, config: PipelineConfig | None = None, record_timing: bool = False):
        self.config = config or PipelineConfig()
        self.record_timing = record_timing
        self.reset()

    def reset(self):
        self._prev_pyr = None
        self._prev_shape = None
        self._tracked = []
        self._iteration = 0

    def _pyramid(self, img: GrayscaleImage):
        return build_pyramid(img, self.config.lk_levels)

    def feed(self, img: GrayscaleImage, name: str | None = None) -> FrameRecord | None:
        pyr = self._pyramid(img)
        if self._prev_pyr is None:
            self._prev_pyr = pyr
            self._prev_shape = img.pixels.shape
            return None
        if img.pixels.shape != self._prev_shape:
            raise ValueError(f"frame size changed from {self._prev_shape} to {img.pixels.shape}")
        if len(pyr) != len(self._prev_pyr):
            raise ValueError("pyramid depth changed between frames")
        record = self._process(self._prev_pyr, pyr, name)
        self._prev_pyr = pyr
        return record

    def _process(self, prev_pyr, next_pyr, name) -> FrameRecord:
        cfg = self.config
        clock = _Clock(self.record_timing)
        i = self._iteration
        self._iteration += 1
        height, width = self._prev_shape

        refreshed = should_refresh(i, len(self._tracked), cfg.refresh_period, cfg.min_tracked)
        if refreshed:
            corners = fast_detect(prev_pyr[0], cfg.fast_threshold, cfg.fast_arc,
                                  cfg.fast_nonmax, cfg.max_corners)
            points = [(float(c.x), float(c.y)) for c in corners]
        else:
            points = list(self._tracked)
        clock.lap("detection")

        track = track_checked(prev_pyr, next_pyr, points, cfg.lk_fb_max, window=cfg.lk_window,
                              max_iter=cfg.lk_max_iter, eps=cfg.lk_eps, max_residual=cfg.lk_max_residual)
        vectors = make_flow_vectors(points, track, cfg.min_flow_sq)
        self._tracked = [r.next for r in track if r.found]
        clock.lap("flow")

        foe, reason = self._foe(vectors)
        clock.lap("foe")

        if foe is not None:
            ttcs = ttc_of_vectors(vectors, foe.foe)
            grid = grid_means(accumulate_grid(vectors, ttcs, width, height))
        else:
            ttcs = np.zeros(0)
            grid = grid_means(accumulate_grid([], [], width, height))
        clock.lap("ttc")

        if cfg.balance_source == "raw":
            sum_left, sum_right = controller.balance_raw([f.x for f in vectors], ttcs, width)
        else:
            sum_left, sum_right = controller.balance(grid.means)
        delta = controller.compute_delta(sum_left, sum_right)
        clock.lap("balance")

        decision = controller.decide(sum_left, sum_right, delta, cfg.threshold)
        if sum_left + sum_right == 0:
            log.info("pair %d: no TTC evidence, defaulting to forward", i)
        clock.lap("decision")

        means_s = None
        if cfg.fps is not None:
            means_s = _grid_list(grid.means / cfg.fps)
        return FrameRecord(
            index=i,
            frame=name,
            refreshed=refreshed,
            corner_count=len(points),
            flow_vector_count=len(vectors),
            foe=None if foe is None else [foe.x, foe.y],
            foe_reason=reason,
            residual_rms=None if foe is None else foe.residual_rms,
            ttc_sums=_grid_list(grid.sums),
            ttc_counts=_grid_list(grid.counts, as_int=True),
            ttc_means=_grid_list(grid.means),
            ttc_means_s=means_s,
            sum_left=sum_left,
            sum_right=sum_right,
            delta=delta,
            decision=decision.value,
            timing_ms=clock.times,
            vectors=[[f.x, f.y, f.u, f.v] for f in vectors],
        )

    def _foe(self, vectors: list[FlowVector]) -> tuple[FocusOfExpansion | None, str | None]:
        try:
            return estimate_foe(vectors), None
        except InsufficientDataError:
            reason = "insufficient vectors"
        except DegenerateGeometryError:
            reason = "degenerate geometry"
        log.info("pair %d: FOE unavailable (%s)", self._iteration - 1, reason)
        return None, reason


def run_frames(frames, config: PipelineConfig | None = None, names=None,
               record_timing: bool = False) -> list[FrameRecord]:
    pipe = Pipeline(config, record_timing)
    names = list(names) if names is not None else [None] * len(frames)
    out = []
    for img, name in zip(frames, names):
        rec = pipe.feed(img, name)
        if rec is not None:
            out.append(rec)
    return out
