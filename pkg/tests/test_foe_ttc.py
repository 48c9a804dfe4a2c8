import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from conftest import radial_vectors
from flowguard.errors import DegenerateGeometryError, InsufficientDataError, InvalidInputError
from flowguard.flow import FlowVector
from flowguard.foe_ttc import (accumulate_grid, build_foe_system, cell_of, estimate_foe, grid_means,
                               householder_qr, apply_qt, lstsq_qr, solve_foe, ttc_of_vector)

coord = st.floats(0, 128, allow_nan=False)


def test_system_rows_follow_definition():
    s = build_foe_system([FlowVector(2, 3, 4, 5), FlowVector(1, 1, 1, 0)])
    assert s.A[0].tolist() == [-5, 4]
    assert s.b[0] == 2 * 5 - 3 * 4 == -2


def test_radial_rows_satisfy_negated_foe():
    f = np.array([40.0, 70.0])
    s = build_foe_system(radial_vectors(f, [(10, 20), (90, 100)], [0.1, 0.3]))
    assert np.allclose(s.A @ (-f), s.b)


def test_system_needs_two_vectors():
    with pytest.raises(InsufficientDataError):
        build_foe_system([])
    with pytest.raises(InsufficientDataError):
        build_foe_system([FlowVector(1, 1, 1, 1)])


def test_documented_radial_example():
    vecs = [FlowVector(74, 64, 1, 0), FlowVector(64, 80, 0, 1.6), FlowVector(44, 44, -2, -2)]
    foe = estimate_foe(vecs)
    assert foe.foe == pytest.approx((64, 64), abs=1e-9)
    assert foe.residual_rms < 1e-9
    assert foe.n_vectors == 3


def test_parallel_flow_is_degenerate():
    vecs = [FlowVector(x, y, 1, 0) for x, y in [(1, 2), (5, 9), (30, 4)]]
    with pytest.raises(DegenerateGeometryError):
        estimate_foe(vecs)


def test_noisy_radial_field_monte_carlo():
    rng = np.random.default_rng(3)
    truth = np.array([31.5, 88.25])
    pts = rng.uniform(0, 128, (200, 2))
    ang = np.arctan2(pts[:, 1] - truth[1], pts[:, 0] - truth[0]) + rng.normal(0, 0.05, 200)
    mag = 0.02 * np.hypot(*(pts - truth).T)
    vecs = [FlowVector(x, y, m * math.cos(a), m * math.sin(a)) for (x, y), a, m in zip(pts, ang, mag)]
    foe = estimate_foe(vecs)
    s = build_foe_system(vecs)
    oracle = -np.linalg.inv(s.A.T @ s.A) @ s.A.T @ s.b
    assert np.hypot(foe.x - truth[0], foe.y - truth[1]) < 2
    assert np.allclose(foe.foe, oracle, atol=1e-6)


@given(st.integers(0, 2**32 - 1), st.integers(2, 12), st.integers(2, 4))
def test_qr_matches_numpy(seed, extra, n):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n + extra, n))
    b = rng.normal(size=n + extra)
    V, R = householder_qr(A)
    assert np.allclose(np.triu(R), R)
    # Q^T A reproduces R on top and zeros below
    QtA = np.column_stack([apply_qt(V, A[:, k]) for k in range(n)])
    assert np.allclose(QtA[:n], R) and np.allclose(QtA[n:], 0)
    assert np.allclose(lstsq_qr(A, b), np.linalg.lstsq(A, b, rcond=None)[0])


@given(coord, coord, st.lists(st.tuples(coord, coord, st.floats(0.01, 1)), min_size=3, max_size=30))
def test_radial_field_exact(fx, fy, samples):
    pts = [(x, y) for x, y, _ in samples]
    assume(min(math.hypot(x - fx, y - fy) for x, y in pts) > 1)
    d = np.array(pts) - (fx, fy)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    # directions must span the plane well
    assume(np.linalg.svd(d, compute_uv=False)[-1] > 0.2)
    foe = estimate_foe(radial_vectors((fx, fy), pts, [k for _, _, k in samples]))
    assert math.hypot(foe.x - fx, foe.y - fy) < 1e-6
    assert foe.residual_rms < 1e-9


def test_ttc_examples():
    assert ttc_of_vector((100, 64), (3, 0), (64, 64)) == 12.0
    assert ttc_of_vector((5, 5), (1, 2), (5, 5)) == 0.0
    assert ttc_of_vector((10, 20), (1, 2), (4, 12)) == pytest.approx(math.sqrt(20))
    with pytest.raises(ZeroDivisionError):
        ttc_of_vector((1, 1), (0, 0), (0, 0))


@given(coord, coord, coord, coord, st.floats(0.1, 5), st.floats(0.1, 5), st.floats(0.1, 10))
def test_ttc_scale_invariance(px, py, fx, fy, u, v, s):
    base = ttc_of_vector((px, py), (u, v), (fx, fy))
    scaled = ttc_of_vector((s * px, s * py), (s * u, s * v), (s * fx, s * fy))
    assert scaled == pytest.approx(base, rel=1e-9, abs=1e-12)


def test_cell_assignment_and_ties():
    assert cell_of(4, 4, 128, 128) == (0, 0)
    assert cell_of(127, 0, 128, 128) == (0, 15)
    # x=8 is equidistant from centres 4 and 12
    assert cell_of(8, 8, 128, 128) == (0, 0)
    assert cell_of(8.01, 8.01, 128, 128) == (1, 1)
    assert cell_of(-5, 200, 128, 128) == (15, 0)


def test_grid_single_and_pair():
    g = grid_means(accumulate_grid([FlowVector(4, 4, 1, 0)], [7.0], 128, 128))
    assert g.sums[0, 0] == 7 and g.counts[0, 0] == 1
    assert g.sums.sum() == 7 and g.counts.sum() == 1
    assert np.count_nonzero(~np.isnan(g.means)) == 1 and g.means[0, 0] == 7.0
    g2 = grid_means(accumulate_grid([FlowVector(50, 50, 1, 0), FlowVector(52, 51, 1, 0)], [3.0, 5.0], 128, 128))
    r, c = cell_of(50, 50, 128, 128)
    assert g2.sums[r, c] == 8 and g2.counts[r, c] == 2 and g2.means[r, c] == 4.0


def test_grid_errors():
    with pytest.raises(InvalidInputError):
        accumulate_grid([FlowVector(1, 1, 1, 1)], [], 128, 128)
    with pytest.raises(InvalidInputError):
        accumulate_grid([], [], 15, 128)


@given(st.lists(st.tuples(coord, coord, st.floats(0, 500)), max_size=60))
def test_grid_conservation_and_mean_bounds(items):
    vecs = [FlowVector(x, y, 1, 0) for x, y, _ in items]
    ttcs = [t for _, _, t in items]
    g = grid_means(accumulate_grid(vecs, ttcs, 128, 128))
    assert g.counts.sum() == len(items)
    assert (g.counts >= 0).all()
    per_cell = {}
    for f, t in zip(vecs, ttcs):
        per_cell.setdefault(cell_of(f.x, f.y, 128, 128), []).append(t)
    for (r, c), vals in per_cell.items():
        assert min(vals) - 1e-9 <= g.means[r, c] <= max(vals) + 1e-9
        assert abs(g.means[r, c] - g.sums[r, c] / g.counts[r, c]) <= 1e-9
    assert np.isnan(g.means[g.counts == 0]).all()


def test_solve_needs_two_rows():
    from flowguard.foe_ttc import FoeSystem
    with pytest.raises(InsufficientDataError):
        solve_foe(FoeSystem(np.zeros((1, 2)), np.zeros(1)))
