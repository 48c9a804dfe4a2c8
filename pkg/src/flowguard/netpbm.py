"""Binary PGM (P5) and PPM (P6) reading and writing.

Files carry 8-bit samples; in memory grayscale images are floats in [0, 1].
"""
from __future__ import annotations

import os

import numpy as np

from .errors import ParseError
from .imageops import GrayscaleImage, rgb_to_grayscale

_WHITESPACE = b" \t\n\r\v\f"


def _read_token(buf: bytes, pos: int) -> tuple[bytes, int, int]:
    """Return the next header token, its start offset and the offset just past it."""
    n = len(buf)
    while pos < n:
        c = buf[pos:pos + 1]
        if c in _WHITESPACE:
            pos += 1
        elif c == b"#":
            while pos < n and buf[pos:pos + 1] not in b"\r\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and buf[pos:pos + 1] not in _WHITESPACE and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise ParseError("unexpected end of header", pos)
    return buf[start:pos], start, pos


def _parse_int(token: bytes, offset: int, what: str) -> int:
    try:
        value = int(token.decode("ascii"))
    except (UnicodeDecodeError, ValueError):
        raise ParseError(f"{what} is not an integer: {token!r}", offset) from None
    return value


def decode(buf: bytes) -> tuple[str, np.ndarray]:
    """Decode a P5/P6 byte string into ``(magic, uint8 array)``.

    The array has shape ``(H, W)`` for P5 and ``(H, W, 3)`` for P6.
    """
    magic, _, pos = _read_token(buf, 0)
    if magic not in (b"P5", b"P6"):
        raise ParseError(f"unsupported magic {magic!r}", 0)
    fields, starts = [], []
    for what in ("width", "height", "maxval"):
        tok, start, pos = _read_token(buf, pos)
        fields.append(_parse_int(tok, start, what))
        starts.append(start)
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise ParseError(f"invalid dimensions {width}x{height}", starts[0 if width < 1 else 1])
    if not 1 <= maxval <= 255:
        raise ParseError(f"maxval {maxval} not in 1..255", starts[2])
    if pos >= len(buf) or buf[pos:pos + 1] not in _WHITESPACE:
        raise ParseError("missing whitespace after maxval", pos)
    pos += 1
    channels = 1 if magic == b"P5" else 3
    need = width * height * channels
    payload = buf[pos:pos + need]
    if len(payload) < need:
        raise ParseError(
            f"truncated payload: expected {need} bytes, found {len(payload)}", pos + len(payload))
    arr = np.frombuffer(payload, dtype=np.uint8).copy()
    if maxval != 255:
        # rescale so the in-memory range is always 0..255
        arr = np.round(arr.astype(np.float64) * 255.0 / maxval).clip(0, 255).astype(np.uint8)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return magic.decode("ascii"), arr.reshape(shape)


def encode_gray(img: GrayscaleImage) -> bytes:
    q = np.round(img.pixels * 255.0).clip(0, 255).astype(np.uint8)
    return b"P5 %d %d 255\n" % (img.width, img.height) + q.tobytes()


def encode_rgb(rgb: np.ndarray) -> bytes:
    arr = np.asarray(rgb, dtype=np.uint8)
    h, w = arr.shape[:2]
    return b"P6 %d %d 255\n" % (w, h) + arr.tobytes()


def load_image(path) -> GrayscaleImage:
    """Read a PGM, or a PPM converted to luminance."""
    with open(path, "rb") as fh:
        magic, arr = decode(fh.read())
    if magic == "P6":
        return rgb_to_grayscale(arr)
    return GrayscaleImage(arr.astype(np.float64) / 255.0)


def load_rgb(path) -> np.ndarray:
    """Read a PPM (or PGM, replicated to three channels) as ``(H, W, 3)`` uint8."""
    with open(path, "rb") as fh:
        magic, arr = decode(fh.read())
    if magic == "P5":
        arr = np.repeat(arr[..., None], 3, axis=2)
    return arr


def _write(path, payload: bytes):
    with open(os.fspath(path), "wb") as fh:
        fh.write(payload)


def save_image(img: GrayscaleImage, path):
    _write(path, encode_gray(img))


def save_rgb(rgb: np.ndarray, path):
    _write(path, encode_rgb(rgb))
