"""Gradient-magnitude and Laplacian-of-Gaussian edge maps.

Kernels are applied by correlation (no flip) with edge-replicated borders.
The gradient operators use their textbook forms:

    Roberts   Gx = [[1, 0], [0, -1]]          Gy = [[0, 1], [-1, 0]]
    Prewitt   Gx = [[-1, 0, 1]] * 3 rows      Gy = Gx transposed
    Sobel     Gx = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]]   Gy = Gx transposed

Roberts kernels are anchored at their top-left tap; odd kernels at the center.
"""

import math
from dataclasses import dataclass

import numpy as np

from .imaging import as_gray


@dataclass(frozen=True)
class EdgeOperator:
    name: str
    kernel_x: np.ndarray
    kernel_y: np.ndarray

    def __post_init__(self):
        for k in (self.kernel_x, self.kernel_y):
            if abs(float(np.sum(k))) > 1e-12:
                raise ValueError(f"{self.name}: kernel entries must sum to zero")


ROBERTS = EdgeOperator(
    "roberts",
    np.array([[1.0, 0.0], [0.0, -1.0]]),
    np.array([[0.0, 1.0], [-1.0, 0.0]]),
)
PREWITT = EdgeOperator(
    "prewitt",
    np.array([[-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0]]),
    np.array([[-1.0, -1.0, -1.0], [0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]),
)
SOBEL = EdgeOperator(
    "sobel",
    np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]]),
    np.array([[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]]),
)
OPERATORS = {op.name: op for op in (ROBERTS, PREWITT, SOBEL)}


def correlate(img, kernel):
    """Correlate with an edge-replicated border; output has the input's shape."""
    kh, kw = kernel.shape
    # odd kernels are centered, even ones anchored at the top-left tap
    top, left = (kh - 1) // 2 if kh % 2 else 0, (kw - 1) // 2 if kw % 2 else 0
    bottom, right = kh - 1 - top, kw - 1 - left
    padded = np.pad(img, ((top, bottom), (left, right)), mode="edge")
    h, w = img.shape
    out = np.zeros((h, w))
    for i in range(kh):
        for j in range(kw):
            if kernel[i, j] != 0:
                out += kernel[i, j] * padded[i:i + h, j:j + w]
    return out


def gradient_edges(img, op=SOBEL):
    if isinstance(op, str):
        op = OPERATORS[op]
    img = as_gray(img)
    kh, kw = op.kernel_x.shape
    if img.shape[0] < kh or img.shape[1] < kw:
        raise ValueError(f"image {img.shape} smaller than {op.name} kernel")
    gx = correlate(img, op.kernel_x)
    gy = correlate(img, op.kernel_y)
    return np.hypot(gx, gy)


def log_kernel(sigma):
    """Zero-sum Laplacian-of-Gaussian kernel with radius ceil(3 sigma)."""
    radius = int(math.ceil(3 * sigma))
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    xx, yy = np.meshgrid(ax, ax)
    r2 = xx ** 2 + yy ** 2
    k = (r2 - 2 * sigma ** 2) / sigma ** 4 * np.exp(-r2 / (2 * sigma ** 2))
    return k - k.mean()


def log_response(img, sigma):
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    img = as_gray(img)
    centered = img - img.mean()
    resp = correlate(centered, log_kernel(sigma))
    # responses at round-off level count as exact zeros
    scale = float(np.abs(centered).max()) + 1.0
    resp[np.abs(resp) < 1e-9 * scale] = 0.0
    return resp


def log_zero_crossings(img, sigma=1.0, floor=0.0):
    """Mark sign changes of the LoG response against 4-neighbors.

    Of each crossing pair the pixel whose response is nearer zero is marked
    (both on a tie), provided the jump across the pair exceeds ``floor``.
    """
    resp = log_response(img, sigma)
    mask = np.zeros(resp.shape, dtype=bool)
    a = np.abs(resp)
    # horizontal pairs (x, x+1) and vertical pairs (y, y+1)
    for p, q, ap, aq, sl_p, sl_q in (
        (resp[:, :-1], resp[:, 1:], a[:, :-1], a[:, 1:],
         (slice(None), slice(None, -1)), (slice(None), slice(1, None))),
        (resp[:-1, :], resp[1:, :], a[:-1, :], a[1:, :],
         (slice(None, -1), slice(None)), (slice(1, None), slice(None))),
    ):
        cross = (p * q < 0) & (np.abs(p - q) > floor)
        mask[sl_p] |= cross & (ap <= aq)
        mask[sl_q] |= cross & (aq <= ap)
    return mask


def normalize_magnitude(mag):
    """Scale a magnitude map to [0, 255] for display; all-zero stays zero."""
    peak = float(np.max(mag)) if mag.size else 0.0
    if peak <= 0:
        return np.zeros_like(mag, dtype=np.float64)
    return mag * (255.0 / peak)
