"""Orthonormal 2-D DCT-II and coefficient truncation."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=16)
def dct_matrix(n):
    """Orthonormal DCT-II basis: row u holds frequency u sampled at x = 0..n-1."""
    x = np.arange(n)
    u = x[:, None]
    m = np.cos(np.pi * (2 * x[None, :] + 1) * u / (2 * n))
    m *= np.sqrt(2.0 / n)
    m[0] = np.sqrt(1.0 / n)
    m.setflags(write=False)
    return m


def _square(block):
    block = np.asarray(block, dtype=np.float64)
    if block.ndim != 2 or block.shape[0] != block.shape[1] or block.shape[0] < 1:
        raise ValueError(f"expected a non-empty square block, got shape {block.shape}")
    return block


def dct2(block):
    block = _square(block)
    c = dct_matrix(block.shape[0])
    return c @ block @ c.T


def idct2(coeffs):
    coeffs = _square(coeffs)
    c = dct_matrix(coeffs.shape[0])
    return c.T @ coeffs @ c


def truncate_block(coeffs, k):
    """Top-left ``k x k`` coefficients flattened row-major."""
    coeffs = _square(coeffs)
    if not 1 <= k <= coeffs.shape[0]:
        raise ValueError(f"k={k} outside [1, {coeffs.shape[0]}]")
    return coeffs[:k, :k].reshape(-1).copy()
