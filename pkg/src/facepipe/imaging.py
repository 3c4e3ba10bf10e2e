"""Raster primitives shared by every stage of the pipeline.

Images are plain numpy arrays:

* RGB image   -- ``uint8`` array of shape ``(height, width, 3)``
* gray image  -- ``float64`` array of shape ``(height, width)``, values in [0, 255]
* binary mask -- ``bool`` array of shape ``(height, width)``

Coordinates follow the raster convention: ``x`` is the column index growing
rightward, ``y`` is the row index growing downward.  A rotation by ``angle``
maps an offset ``(dx, dy)`` to ``(dx cos a - dy sin a, dx sin a + dy cos a)``
in that frame, so a point to the right of the center moves below it for
``angle = pi/2``.
"""

import math
import os
import re
from pathlib import Path

import numpy as np

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class PpmError(ValueError):
    """Base class for malformed PPM input."""


class PpmHeaderError(PpmError):
    pass


class PpmTruncatedError(PpmError):
    pass


class PpmMaxvalError(PpmError):
    pass


def as_rgb(img):
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"RGB image must have shape (H, W, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("RGB image must be at least 1x1")
    if arr.dtype != np.uint8:
        if np.any(arr < 0) or np.any(arr > 255):
            raise ValueError("RGB channels must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def as_gray(img):
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"gray image must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("gray image contains non-finite intensities")
    return arr


# ---------------------------------------------------------------------------
# PPM I/O

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n?\s*)*([^\s#]+)")


def _header_tokens(data, count):
    """Read ``count`` whitespace separated header tokens, skipping comments.

    Returns the tokens and the offset just past the last one.
    """
    tokens = []
    pos = 0
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise PpmHeaderError("PPM header ended early")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos


def load_ppm(path):
    """Read a P3 or P6 PPM file with maxval 255 into an RGB array."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such PPM file: {path}")
    data = path.read_bytes()

    tokens, pos = _header_tokens(data, 4)
    magic = tokens[0]
    if magic not in (b"P3", b"P6"):
        raise PpmHeaderError(f"unsupported magic number {magic!r} in {path}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise PpmHeaderError(f"non-integer size or maxval in {path}") from None
    if width < 1 or height < 1:
        raise PpmHeaderError(f"invalid dimensions {width}x{height} in {path}")
    if maxval != 255:
        raise PpmMaxvalError(f"maxval must be 255, got {maxval} in {path}")

    n = width * height * 3
    if magic == b"P6":
        # exactly one whitespace byte separates maxval from the raster
        if pos >= len(data) or not data[pos:pos + 1].isspace():
            raise PpmTruncatedError(f"missing pixel data in {path}")
        raster = data[pos + 1:pos + 1 + n]
        if len(raster) < n:
            raise PpmTruncatedError(
                f"expected {n} bytes of pixel data, found {len(raster)} in {path}")
        values = np.frombuffer(raster, dtype=np.uint8)
    else:
        body = re.sub(rb"#[^\n]*", b"", data[pos:]).split()
        if len(body) < n:
            raise PpmTruncatedError(
                f"expected {n} samples, found {len(body)} in {path}")
        try:
            values = np.array([int(t) for t in body[:n]], dtype=np.int64)
        except ValueError:
            raise PpmHeaderError(f"non-integer sample in {path}") from None
        if values.min() < 0 or values.max() > 255:
            raise PpmHeaderError(f"sample outside [0, 255] in {path}")
        values = values.astype(np.uint8)
    return values.reshape(height, width, 3).copy()


def encode_ppm(img, format="P6"):
    img = as_rgb(img)
    height, width = img.shape[:2]
    header = f"{format}\n{width} {height}\n255\n".encode("ascii")
    if format == "P6":
        return header + np.ascontiguousarray(img).tobytes()
    if format != "P3":
        raise ValueError(f"unknown PPM format {format!r}")
    flat = img.reshape(-1)
    lines = []
    for start in range(0, flat.size, 12):
        lines.append(" ".join(str(v) for v in flat[start:start + 12]))
    return header + ("\n".join(lines) + "\n").encode("ascii")


def atomic_write_bytes(path, payload):
    """Write via a temporary sibling file and rename into place."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    try:
        tmp.write_bytes(payload)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def save_ppm(img, path, format="P6"):
    atomic_write_bytes(path, encode_ppm(img, format))


def quantize(gray):
    """Round-half-up to integers in [0, 255]."""
    return np.clip(np.floor(as_gray(gray) + 0.5), 0, 255).astype(np.uint8)


def gray_to_rgb(gray):
    q = quantize(gray)
    return np.repeat(q[:, :, None], 3, axis=2)


def mask_to_rgb(mask):
    return gray_to_rgb(np.where(np.asarray(mask, dtype=bool), 255.0, 0.0))


# ---------------------------------------------------------------------------
# Pixel operations

def to_gray(img):
    img = as_rgb(img).astype(np.float64)
    wr, wg, wb = LUMA_WEIGHTS
    return wr * img[..., 0] + wg * img[..., 1] + wb * img[..., 2]


def difference_image(a, b):
    a, b = as_gray(a), as_gray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return np.abs(a - b)


def threshold(img, t):
    return as_gray(img) > t


def dilate(mask, radius):
    """Binary dilation with a disk of the given radius (pixels)."""
    mask = np.asarray(mask, dtype=bool)
    if radius <= 0:
        return mask.copy()
    r = int(math.floor(radius))
    h, w = mask.shape
    padded = np.pad(mask, r)
    out = np.zeros_like(mask)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dx * dx + dy * dy <= radius * radius:
                out |= padded[r + dy:r + dy + h, r + dx:r + dx + w]
    return out


def _bilinear_sample(img, xs, ys, fill=None):
    """Sample ``img`` at real coordinates.

    With ``fill=None`` coordinates are clamped to the image (edge replication);
    otherwise samples falling outside ``[0, w-1] x [0, h-1]`` return ``fill``.
    """
    h, w = img.shape
    if fill is not None:
        outside = (xs < 0) | (xs > w - 1) | (ys < 0) | (ys > h - 1)
    xs = np.clip(xs, 0, w - 1)
    ys = np.clip(ys, 0, h - 1)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
    bottom = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
    out = top * (1 - fy) + bottom * fy
    if fill is not None:
        out = np.where(outside, fill, out)
    return out


def resize_bilinear(img, w, h):
    """Resize so that corner pixel centers map onto corner pixel centers."""
    img = as_gray(img)
    if w < 1 or h < 1:
        raise ValueError(f"target size must be at least 1x1, got {w}x{h}")
    src_h, src_w = img.shape
    if (src_w, src_h) == (w, h):
        return img.copy()
    sx = (src_w - 1) / (w - 1) if w > 1 else 0.0
    sy = (src_h - 1) / (h - 1) if h > 1 else 0.0
    xs = np.arange(w) * sx if w > 1 else np.full(1, (src_w - 1) / 2)
    ys = np.arange(h) * sy if h > 1 else np.full(1, (src_h - 1) / 2)
    gx, gy = np.meshgrid(xs, ys)
    return _bilinear_sample(img, gx, gy)


def rotate_point(point, angle, center):
    """Rotate a coordinate pair about ``center`` using the raster convention."""
    c, s = math.cos(angle), math.sin(angle)
    dx, dy = point[0] - center[0], point[1] - center[1]
    return (center[0] + c * dx - s * dy, center[1] + s * dx + c * dy)


def rotate_about(img, angle, center, fill=0.0):
    """Rotate ``img`` by ``angle`` radians about ``center`` = (x, y).

    Output pixels are pulled from the input through the inverse rotation and
    bilinear interpolation; samples falling outside the input become ``fill``.
    """
    img = as_gray(img)
    if angle == 0:
        return img.copy()
    h, w = img.shape
    cx, cy = center
    gx, gy = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    c, s = math.cos(angle), math.sin(angle)
    dx, dy = gx - cx, gy - cy
    # inverse rotation: R(-angle)
    src_x = cx + c * dx + s * dy
    src_y = cy - s * dx + c * dy
    # tolerate round-off at the border so identity-like samples are not filled
    eps = 1e-9
    src_x = np.where(np.abs(src_x - np.round(src_x)) < eps, np.round(src_x), src_x)
    src_y = np.where(np.abs(src_y - np.round(src_y)) < eps, np.round(src_y), src_y)
    return _bilinear_sample(img, src_x, src_y, fill=fill)
