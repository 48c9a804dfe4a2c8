"""Left/right TTC balance and the steering decision."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

THRESHOLD = 0.5


class Decision(str, enum.Enum):
    FORWARD = "forward"
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"

    def mirrored(self) -> Decision:
        return {Decision.TURN_LEFT: Decision.TURN_RIGHT,
                Decision.TURN_RIGHT: Decision.TURN_LEFT}.get(self, self)


@dataclass(frozen=True)
class BalanceReading:
    sum_left: float
    sum_right: float
    delta: float
    decision: Decision


def balance(means: np.ndarray) -> tuple[float, float]:
    """Sum the defined (non-NaN) cell means over the left and right halves."""
    m = np.asarray(means, dtype=np.float64)
    half = m.shape[1] // 2
    vals = np.abs(np.where(np.isnan(m), 0.0, m))
    # fsum is order-independent, so mirrored grids give swapped sums exactly
    return math.fsum(vals[:, :half].ravel()), math.fsum(vals[:, half:].ravel())


def balance_raw(xs, ttcs, width: int) -> tuple[float, float]:
    """Per-vector variant: each TTC goes to the half holding its point."""
    xs = np.asarray(xs, dtype=np.float64)
    ttcs = np.abs(np.asarray(ttcs, dtype=np.float64))
    left = xs < width / 2.0
    return math.fsum(ttcs[left]), math.fsum(ttcs[~left])


def compute_delta(sum_left: float, sum_right: float) -> float:
    total = sum_left + sum_right
    if total == 0:
        return 0.0
    return (sum_left - sum_right) / total


def decide(sum_left: float, sum_right: float, delta: float, threshold: float = THRESHOLD) -> Decision:
    """Turn away from the half with the smaller TTC sum once ``|delta|``
    exceeds ``threshold``."""
    if not 0 < threshold <= 1:
        raise InvalidParameterError(f"threshold must lie in (0, 1], got {threshold}")
    if abs(delta) <= threshold:
        return Decision.FORWARD
    if sum_left < sum_right:
        return Decision.TURN_RIGHT
    if sum_right < sum_left:
        return Decision.TURN_LEFT
    return Decision.FORWARD


def evaluate(sum_left: float, sum_right: float, threshold: float = THRESHOLD) -> BalanceReading:
    delta = compute_delta(sum_left, sum_right)
    return BalanceReading(sum_left, sum_right, delta, decide(sum_left, sum_right, delta, threshold))
