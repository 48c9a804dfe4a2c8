"""Focus of expansion by least squares, time to collision, and the 16x16
TTC accumulation grid."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, InsufficientDataError, InvalidInputError
from .flow import FlowVector

GRID_SIZE = 16
RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class FoeSystem:
    """Overdetermined system ``A @ foe ~= b``; row i is ``(-v_i, u_i)`` and
    ``b_i = x_i v_i - y_i u_i``."""

    A: np.ndarray
    b: np.ndarray

    @property
    def n(self) -> int:
        return len(self.b)


@dataclass(frozen=True)
class FocusOfExpansion:
    x: float
    y: float
    residual_rms: float
    n_vectors: int

    @property
    def foe(self):
        return (self.x, self.y)


@dataclass(frozen=True, eq=False)
class TtcGrid:
    """Per-cell TTC sums and counts; ``means`` is NaN where a cell is empty."""

    sums: np.ndarray
    counts: np.ndarray
    means: np.ndarray | None = None

    def defined(self) -> np.ndarray:
        return self.counts > 0


def build_foe_system(vectors: list[FlowVector]) -> FoeSystem:
    if len(vectors) < 2:
        raise InsufficientDataError(f"need at least 2 flow vectors, got {len(vectors)}")
    arr = np.array([(f.x, f.y, f.u, f.v) for f in vectors], dtype=np.float64)
    x, y, u, v = arr.T
    A = np.column_stack([-v, u])
    b = x * v - y * u
    return FoeSystem(A, b)


def householder_qr(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Compact Householder QR of a tall matrix.

    Returns ``(V, R)`` where column k of ``V`` is the unit reflector for
    step k (zero above the diagonal) and ``R`` is the ``n x n`` upper
    triangle.
    """
    M = np.array(A, dtype=np.float64)
    m, n = M.shape
    V = np.zeros((m, n))
    for k in range(n):
        x = M[k:, k]
        norm = np.linalg.norm(x)
        if norm == 0.0:
            continue
        v = x.copy()
        v[0] += math.copysign(norm, x[0]) if x[0] != 0 else norm
        v /= np.linalg.norm(v)
        M[k:, k:] -= 2.0 * np.outer(v, v @ M[k:, k:])
        V[k:, k] = v
    return V, np.triu(M[:n, :n])


def apply_qt(V: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Compute ``Q^T b`` from the reflectors returned by ``householder_qr``."""
    y = np.array(b, dtype=np.float64)
    for k in range(V.shape[1]):
        v = V[k:, k]
        y[k:] -= 2.0 * v * (v @ y[k:])
    return y


def lstsq_qr(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Least-squares solution of ``A x = b`` by Householder QR and back substitution."""
    V, R = householder_qr(A)
    n = R.shape[0]
    diag = np.abs(np.diag(R))
    scale = max(np.abs(A).max(initial=0.0), 1e-300)
    if np.any(diag <= RANK_TOL * scale * math.sqrt(len(b))):
        raise DegenerateGeometryError("flow directions do not span two dimensions")
    qtb = apply_qt(V, b)[:n]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (qtb[i] - R[i, i + 1:] @ x[i + 1:]) / R[i, i]
    return x


def solve_foe(system: FoeSystem) -> FocusOfExpansion:
    """Least-squares FOE.

    A radial field about ``f`` satisfies ``A @ (-f) = b`` with the row and
    right-hand-side conventions above, so the QR solution is negated.
    """
    if system.n < 2:
        raise InsufficientDataError(f"need at least 2 rows, got {system.n}")
    sol = lstsq_qr(system.A, system.b)
    r = system.A @ sol - system.b
    rms = float(np.linalg.norm(r) / math.sqrt(system.n))
    return FocusOfExpansion(float(-sol[0]), float(-sol[1]), rms, system.n)


def estimate_foe(vectors: list[FlowVector]) -> FocusOfExpansion:
    return solve_foe(build_foe_system(vectors))


def ttc_of_vector(p, v, foe) -> float:
    """Frames to contact: distance to the FOE over flow magnitude."""
    den = v[0] ** 2 + v[1] ** 2
    if den == 0:
        raise ZeroDivisionError("zero displacement has no time to collision")
    num = (p[0] - foe[0]) ** 2 + (p[1] - foe[1]) ** 2
    return math.sqrt(num / den)


def ttc_of_vectors(vectors: list[FlowVector], foe) -> np.ndarray:
    return np.array([ttc_of_vector(f.p, f.d, foe) for f in vectors], dtype=np.float64)


def cell_of(x: float, y: float, width: int, height: int, size: int = GRID_SIZE) -> tuple[int, int]:
    """Row and column of the grid point nearest ``(x, y)``.

    Grid points sit at ``((c + 0.5) * width / size, (r + 0.5) * height / size)``;
    a point exactly between two centres goes to the smaller index.
    """
    def nearest(coord, extent):
        pos = coord * size / extent - 0.5
        # ties (pos exactly k + 0.5) round down
        idx = math.ceil(pos - 0.5)
        return min(max(idx, 0), size - 1)

    return nearest(y, height), nearest(x, width)


def accumulate_grid(vectors: list[FlowVector], ttcs, width: int, height: int) -> TtcGrid:
    ttcs = list(ttcs)
    if len(vectors) != len(ttcs):
        raise InvalidInputError(f"{len(vectors)} vectors but {len(ttcs)} TTC values")
    if width < GRID_SIZE or height < GRID_SIZE:
        raise InvalidInputError(f"image must be at least {GRID_SIZE}x{GRID_SIZE}")
    sums = np.zeros((GRID_SIZE, GRID_SIZE))
    counts = np.zeros((GRID_SIZE, GRID_SIZE), dtype=np.int64)
    for f, ttc in zip(vectors, ttcs):
        r, c = cell_of(f.x, f.y, width, height)
        sums[r, c] += ttc
        counts[r, c] += 1
    return TtcGrid(sums, counts)


def grid_means(grid: TtcGrid) -> TtcGrid:
    means = np.full(grid.sums.shape, np.nan)
    has = grid.counts > 0
    means[has] = grid.sums[has] / grid.counts[has]
    return TtcGrid(grid.sums, grid.counts, means)
