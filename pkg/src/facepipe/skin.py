"""Fixed RGB skin-color rule."""

from dataclasses import dataclass

import numpy as np

from .imaging import as_rgb


@dataclass(frozen=True)
class SkinRuleReport:
    clause1_hits: int
    clause2_hits: int
    total_skin: int


def _check_channel(v):
    if not 0 <= v <= 255:
        raise ValueError(f"channel value {v} outside [0, 255]")


def is_skin(r, g, b):
    """Return True when (r, g, b) passes either clause of the skin rule.

    Clause 1 (uniform daylight): R > 95, G > 40, B > 20, max - min > 15,
    |R - G| > 15, R > G and R > B.
    Clause 2 (flash / lateral light): R > 220, G > 210, B > 170,
    |R - G| <= 15, R > B and G > B.
    """
    for v in (r, g, b):
        _check_channel(v)
    r, g, b = int(r), int(g), int(b)
    clause1 = (r > 95 and g > 40 and b > 20
               and max(r, g, b) - min(r, g, b) > 15
               and abs(r - g) > 15 and r > g and r > b)
    clause2 = (r > 220 and g > 210 and b > 170
               and abs(r - g) <= 15 and r > b and g > b)
    return clause1 or clause2


def _clauses(img):
    img = as_rgb(img).astype(np.int16)
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    spread = img.max(axis=2) - img.min(axis=2)
    rg = np.abs(r - g)
    clause1 = ((r > 95) & (g > 40) & (b > 20) & (spread > 15)
               & (rg > 15) & (r > g) & (r > b))
    clause2 = ((r > 220) & (g > 210) & (b > 170)
               & (rg <= 15) & (r > b) & (g > b))
    return clause1, clause2


def skin_mask(img):
    clause1, clause2 = _clauses(img)
    return clause1 | clause2


def skin_report(img):
    clause1, clause2 = _clauses(img)
    return SkinRuleReport(
        clause1_hits=int(clause1.sum()),
        clause2_hits=int(clause2.sum()),
        total_skin=int((clause1 | clause2).sum()),
    )
