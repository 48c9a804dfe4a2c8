"""Raster types and the low-level image kernels.

Every image handled internally is a float64 array in [0, 1], indexed
``[row, col]`` (``[y, x]``). Borders are clamped to the nearest edge pixel
throughout so that output dimensions always equal input dimensions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError, InvalidParameterError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

CANNY_LOW = 0.1
CANNY_HIGH = 0.2
CANNY_SIGMA = 1.4

LANE_FRAME_SIZE = 128
PYRAMID_MIN_DIM = 16


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GrayscaleImage:
    """Single-channel raster with intensities in [0, 1].

    ``pixels`` has shape ``(height, width)`` and is read-only.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidInputError(f"expected a non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise InvalidInputError("intensities must lie in [0, 1]")
        object.__setattr__(self, "pixels", _frozen(arr))

    @classmethod
    def from_flat(cls, data, width: int, height: int) -> GrayscaleImage:
        arr = np.asarray(data, dtype=np.float64)
        if arr.size != width * height:
            raise InvalidInputError(
                f"data length {arr.size} does not match {width}x{height}")
        return cls(arr.reshape(height, width))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def data(self) -> np.ndarray:
        """Row-major flat view of the intensities."""
        return self.pixels.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, GrayscaleImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GradientField:
    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray

    @property
    def direction(self) -> np.ndarray:
        return np.arctan2(self.gy, self.gx)


@dataclass(frozen=True)
class ImagePyramid:
    """Coarse-to-fine stack; ``levels[0]`` is full resolution."""

    levels: tuple

    def __post_init__(self):
        if not self.levels:
            raise InvalidInputError("a pyramid needs at least one level")
        object.__setattr__(self, "levels", tuple(self.levels))

    def __len__(self):
        return len(self.levels)

    def __getitem__(self, k) -> GrayscaleImage:
        return self.levels[k]


def rgb_to_grayscale(rgb, width: int | None = None, height: int | None = None) -> GrayscaleImage:
    """Convert an 8-bit RGB raster to luminance.

    ``rgb`` is either an ``(H, W, 3)`` array or, when ``width`` and ``height``
    are given, a flat interleaved buffer of ``3 * width * height`` bytes.
    """
    arr = np.asarray(rgb)
    if width is not None or height is not None:
        if width is None or height is None or width < 1 or height < 1:
            raise InvalidInputError("width and height must both be >= 1")
        if arr.size != 3 * width * height:
            raise InvalidInputError(
                f"RGB buffer has {arr.size} values, expected {3 * width * height}")
        arr = arr.reshape(height, width, 3)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"expected an (H, W, 3) raster, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if np.any(arr < 0) or np.any(arr > 255):
            raise InvalidInputError("RGB samples must be 8-bit")
    rgbf = arr.astype(np.float64)
    r, g, b = LUMA_WEIGHTS
    gray = (r * rgbf[..., 0] + g * rgbf[..., 1] + b * rgbf[..., 2]) / 255.0
    return GrayscaleImage(np.clip(gray, 0.0, 1.0))


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps with radius ``ceil(3 * sigma)``."""
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be > 0, got {sigma}")
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _convolve_axis(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = len(kernel) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(arr, pad, mode="edge")
    n = arr.shape[axis]
    out = np.zeros_like(arr, dtype=np.float64)
    # fixed tap order keeps results bit-reproducible
    for i, w in enumerate(kernel):
        if axis == 0:
            out += w * padded[i:i + n, :]
        else:
            out += w * padded[:, i:i + n]
    return out


def blur_array(arr: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur of a raw 2-D array (no range checks)."""
    k = gaussian_kernel(sigma)
    return _convolve_axis(_convolve_axis(np.asarray(arr, dtype=np.float64), k, 1), k, 0)


def gaussian_blur(img: GrayscaleImage, sigma: float) -> GrayscaleImage:
    out = blur_array(img.pixels, sigma)
    return GrayscaleImage(np.clip(out, 0.0, 1.0))


def sobel_arrays(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalized Sobel derivatives (divided by 8) with clamped borders."""
    p = np.pad(arr, 1, mode="edge")
    h, w = arr.shape
    tl, tc, tr = p[0:h, 0:w], p[0:h, 1:w + 1], p[0:h, 2:w + 2]
    ml, mr = p[1:h + 1, 0:w], p[1:h + 1, 2:w + 2]
    bl, bc, br = p[2:h + 2, 0:w], p[2:h + 2, 1:w + 1], p[2:h + 2, 2:w + 2]
    gx = ((tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl)) / 8.0
    gy = ((bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr)) / 8.0
    return gx, gy


def sobel_gradients(img: GrayscaleImage) -> GradientField:
    if img.width < 3 or img.height < 3:
        raise InvalidInputError(f"Sobel needs at least 3x3 pixels, got {img.width}x{img.height}")
    gx, gy = sobel_arrays(img.pixels)
    return GradientField(_frozen(gx), _frozen(gy), _frozen(np.hypot(gx, gy)))


def _nonmax_suppress(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    # 0: horizontal gradient, 1: 45 deg, 2: vertical, 3: 135 deg (image y points down)
    bins = np.zeros(mag.shape, dtype=np.int8)
    bins[(angle >= 22.5) & (angle < 67.5)] = 1
    bins[(angle >= 67.5) & (angle < 112.5)] = 2
    bins[(angle >= 112.5) & (angle < 157.5)] = 3

    p = np.pad(mag, 1, mode="constant", constant_values=0.0)
    h, w = mag.shape

    def shifted(dy, dx):
        return p[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]

    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    keep = np.zeros(mag.shape, dtype=bool)
    for b, (dy, dx) in offsets.items():
        ahead = shifted(dy, dx)
        behind = shifted(-dy, -dx)
        # asymmetric comparison so a symmetric ridge keeps a single pixel
        ok = (mag >= behind) & (mag > ahead)
        keep |= (bins == b) & ok
    return np.where(keep, mag, 0.0)


def canny(img: GrayscaleImage, low: float = CANNY_LOW, high: float = CANNY_HIGH,
          sigma: float = CANNY_SIGMA) -> GrayscaleImage:
    """Binary edge map (values 0.0 / 1.0)."""
    if not (0 < low < high):
        raise InvalidParameterError(f"need 0 < low < high, got low={low}, high={high}")
    smooth = blur_array(img.pixels, sigma)
    gx, gy = sobel_arrays(smooth)
    mag = np.hypot(gx, gy)
    thin = _nonmax_suppress(mag, gx, gy)
    weak = thin >= low
    strong = thin > high
    labels, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    if n == 0:
        return GrayscaleImage(np.zeros(mag.shape))
    seeded = np.zeros(n + 1, dtype=bool)
    seeded[np.unique(labels[strong])] = True
    seeded[0] = False
    return GrayscaleImage(seeded[labels].astype(np.float64))


def downsample2(img: GrayscaleImage) -> GrayscaleImage:
    h, w = img.height // 2, img.width // 2
    return GrayscaleImage(img.pixels[0:2 * h:2, 0:2 * w:2])


def build_pyramid(img: GrayscaleImage, levels: int) -> ImagePyramid:
    """Blur-and-halve pyramid, truncated so the coarsest level keeps
    ``min(width, height) >= 16``. Level 0 is always present."""
    out = [img]
    while len(out) < max(1, levels):
        prev = out[-1]
        if min(prev.width // 2, prev.height // 2) < PYRAMID_MIN_DIM:
            break
        out.append(downsample2(gaussian_blur(prev, 1.0)))
    return ImagePyramid(tuple(out))


def resize_nearest(img: GrayscaleImage, width: int, height: int) -> GrayscaleImage:
    rows = np.minimum(((np.arange(height) + 0.5) * img.height / height).astype(int), img.height - 1)
    cols = np.minimum(((np.arange(width) + 0.5) * img.width / width).astype(int), img.width - 1)
    return GrayscaleImage(img.pixels[np.ix_(rows, cols)])


def simplify_lane_frame(rgb, low: float = CANNY_LOW, high: float = CANNY_HIGH,
                        sigma: float = CANNY_SIGMA) -> GrayscaleImage:
    """Grayscale, Canny, then nearest-neighbour resize to 128x128."""
    edges = canny(rgb_to_grayscale(rgb), low, high, sigma)
    return resize_nearest(edges, LANE_FRAME_SIZE, LANE_FRAME_SIZE)
