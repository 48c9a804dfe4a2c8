import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage, signal

from flowguard.errors import InvalidInputError, InvalidParameterError
from flowguard.imageops import (GrayscaleImage, build_pyramid, canny, downsample2, gaussian_blur,
                                gaussian_kernel, rgb_to_grayscale, simplify_lane_frame,
                                sobel_gradients)

images = arrays(np.float64, st.tuples(st.integers(8, 24), st.integers(8, 24)),
                elements=st.floats(0, 1, allow_nan=False))


def test_grayscale_white_black_and_weights():
    rgb = np.array([[[255, 255, 255], [0, 0, 0], [255, 0, 0], [0, 255, 0]]], dtype=np.uint8)
    g = rgb_to_grayscale(rgb)
    assert g.pixels[0, 0] == pytest.approx(1.0)
    assert g.pixels[0, 1] == 0.0
    assert g.pixels[0, 2] == pytest.approx(0.299)
    assert g.pixels[0, 3] == pytest.approx(0.587)


def test_grayscale_flat_input_and_mismatch():
    flat = [10, 20, 30] * 6
    g = rgb_to_grayscale(flat, width=3, height=2)
    assert (g.height, g.width) == (2, 3)
    with pytest.raises(InvalidInputError):
        rgb_to_grayscale(flat, width=4, height=2)


def test_image_rejects_out_of_range():
    with pytest.raises(InvalidInputError):
        GrayscaleImage(np.full((4, 4), 1.5))


def test_kernel_is_normalized_and_symmetric():
    k = gaussian_kernel(1.4)
    assert k.sum() == pytest.approx(1.0)
    assert np.allclose(k, k[::-1])
    assert len(k) == 2 * int(np.ceil(3 * 1.4)) + 1
    with pytest.raises(InvalidParameterError):
        gaussian_kernel(0.0)


def test_blur_matches_direct_2d_convolution(rng):
    a = rng.random((20, 17))
    sigma = 1.2
    k = gaussian_kernel(sigma)
    r = len(k) // 2
    padded = np.pad(a, r, mode="edge")
    oracle = signal.convolve2d(padded, np.outer(k, k), mode="valid")
    out = gaussian_blur(GrayscaleImage(a), sigma).pixels
    assert np.allclose(out, oracle, atol=1e-12)


def test_constant_image_blur_and_gradients():
    img = GrayscaleImage(np.full((12, 12), 0.37))
    assert np.allclose(gaussian_blur(img, 2.0).pixels, 0.37)
    g = sobel_gradients(img)
    assert np.all(g.magnitude == 0)


def test_sobel_matches_stencil_on_ramp():
    x = np.tile(np.arange(10) / 20.0, (10, 1))
    g = sobel_gradients(GrayscaleImage(x))
    # interior slope is 1/20 per pixel
    assert np.allclose(g.gx[1:-1, 1:-1], 1 / 20)
    assert np.allclose(g.gy, 0)


def test_sobel_matches_scipy_oracle(rng):
    a = rng.random((15, 13))
    g = sobel_gradients(GrayscaleImage(a))
    assert np.allclose(g.gx, ndimage.sobel(a, axis=1, mode="nearest") / 8)
    assert np.allclose(g.gy, ndimage.sobel(a, axis=0, mode="nearest") / 8)


def test_sobel_rejects_tiny_image():
    with pytest.raises(InvalidInputError):
        sobel_gradients(GrayscaleImage(np.zeros((2, 5))))


@given(images)
def test_blur_and_sobel_commute_with_mirroring(a):
    img, mir = GrayscaleImage(a), GrayscaleImage(a[:, ::-1].copy())
    assert np.allclose(gaussian_blur(img, 1.0).pixels[:, ::-1], gaussian_blur(mir, 1.0).pixels)
    g, gm = sobel_gradients(img), sobel_gradients(mir)
    assert np.allclose(g.gx[:, ::-1], -gm.gx)
    assert np.allclose(g.gy[:, ::-1], gm.gy)


def test_canny_constant_is_empty():
    assert not canny(GrayscaleImage(np.full((30, 30), 0.6))).pixels.any()


def test_canny_step_edge_is_thin_and_localized():
    a = np.zeros((40, 40))
    a[:, 20:] = 1.0
    e = canny(GrayscaleImage(a)).pixels
    rows = e[5:-5]
    cols = [np.nonzero(r)[0] for r in rows]
    assert all(len(c) == 1 and abs(c[0] - 19.5) <= 1.5 for c in cols)
    assert set(np.unique(e)) <= {0.0, 1.0}


def test_canny_edges_exceed_low_threshold(rng):
    a = ndimage.gaussian_filter(rng.random((48, 48)), 2)
    a = (a - a.min()) / (a.max() - a.min())
    img = GrayscaleImage(a)
    e = canny(img, 0.05, 0.1).pixels.astype(bool)
    mag = sobel_gradients(gaussian_blur(img, 1.4)).magnitude
    assert e.any()
    assert np.all(mag[e] >= 0.05)


def test_canny_invariant_under_affine_rescale(rng):
    a = ndimage.gaussian_filter(rng.random((40, 40)), 1.5)
    a = 0.125 + 0.5 * (a - a.min()) / (a.max() - a.min())
    scale, offset = 0.5, 0.25
    e1 = canny(GrayscaleImage(a), 0.04, 0.08).pixels
    e2 = canny(GrayscaleImage(scale * a + offset), 0.04 * scale, 0.08 * scale).pixels
    assert np.array_equal(e1, e2)


def test_canny_rejects_bad_thresholds():
    with pytest.raises(InvalidParameterError):
        canny(GrayscaleImage(np.zeros((10, 10))), 0.3, 0.2)


def test_pyramid_shapes_and_truncation():
    p = build_pyramid(GrayscaleImage(np.zeros((128, 128))), 3)
    assert [lvl.pixels.shape for lvl in p.levels] == [(128, 128), (64, 64), (32, 32)]
    assert len(build_pyramid(GrayscaleImage(np.zeros((20, 20))), 5)) == 1
    odd = build_pyramid(GrayscaleImage(np.zeros((71, 45))), 2)
    assert odd[1].pixels.shape == (35, 22)


def test_pyramid_preserves_constant():
    p = build_pyramid(GrayscaleImage(np.full((64, 64), 0.42)), 3)
    assert all(np.allclose(lvl.pixels, 0.42) for lvl in p.levels)


@given(st.integers(0, 10_000))
def test_pyramid_mean_is_preserved(seed):
    a = np.random.default_rng(seed).random((64, 64))
    p = build_pyramid(GrayscaleImage(a), 3)
    for lvl in p.levels:
        assert abs(lvl.pixels.mean() - a.mean()) < 0.02


def test_downsample_floor_dimensions():
    assert downsample2(GrayscaleImage(np.zeros((9, 7)))).pixels.shape == (4, 3)


def test_simplify_lane_frame(rng):
    out = simplify_lane_frame(rng.integers(0, 256, (60, 90, 3), dtype=np.uint8))
    assert out.pixels.shape == (128, 128)
    assert set(np.unique(out.pixels)) <= {0.0, 1.0}
    flat = simplify_lane_frame(np.full((50, 50, 3), 90, dtype=np.uint8))
    assert not flat.pixels.any()
