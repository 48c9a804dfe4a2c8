"""Pipeline tunables, loaded from JSON with unknown keys rejected."""
from __future__ import annotations

import json
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import controller, features, flow, foe_ttc, imageops


class PipelineConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    fast_threshold: float = Field(default=features.FAST_THRESHOLD, gt=0, lt=1)
    fast_arc: int = Field(default=features.FAST_ARC, ge=9, le=16)
    fast_nonmax: bool = True
    max_corners: int = Field(default=features.MAX_CORNERS, ge=1)
    refresh_period: int = Field(default=features.REFRESH_PERIOD, ge=1)
    min_tracked: int = Field(default=features.MIN_TRACKED, ge=0)

    lk_window: int = Field(default=flow.LK_WINDOW, ge=2)
    lk_levels: int = Field(default=flow.LK_LEVELS, ge=1)
    lk_max_iter: int = Field(default=flow.LK_MAX_ITER, ge=1)
    lk_eps: float = Field(default=flow.LK_EPS, gt=0)
    lk_max_residual: float = Field(default=flow.LK_MAX_RESIDUAL, gt=0)
    lk_fb_max: Optional[float] = Field(default=flow.LK_FB_MAX, gt=0)
    min_flow_sq: float = Field(default=flow.MIN_FLOW_SQ, gt=0)

    grid_size: Literal[16] = foe_ttc.GRID_SIZE
    balance_source: Literal["mean", "raw"] = "mean"
    threshold: float = Field(default=controller.THRESHOLD, gt=0, le=1)

    canny_low: float = Field(default=imageops.CANNY_LOW, gt=0)
    canny_high: float = Field(default=imageops.CANNY_HIGH, gt=0)
    canny_sigma: float = Field(default=imageops.CANNY_SIGMA, gt=0)

    fps: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check(self):
        if self.canny_low >= self.canny_high:
            raise ValueError("canny_low must be below canny_high")
        return self


def load_config(path=None, **overrides) -> PipelineConfig:
    data = {}
    if path is not None:
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig.model_validate(data)
