"""Connected-component labeling and golden-ratio face candidate filtering."""

import math
from dataclasses import dataclass

import numpy as np

GOLDEN_RATIO = (1 + math.sqrt(5)) / 2


@dataclass(frozen=True)
class Region:
    label: int
    area: int
    bbox: tuple  # (min_x, min_y, max_x, max_y), inclusive
    centroid: tuple  # (x, y)

    @property
    def width(self):
        return self.bbox[2] - self.bbox[0] + 1

    @property
    def height(self):
        return self.bbox[3] - self.bbox[1] + 1

    def to_dict(self):
        return {
            "label": self.label,
            "area": self.area,
            "bbox": list(self.bbox),
            "centroid": list(self.centroid),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["label"]), int(d["area"]),
                   tuple(int(v) for v in d["bbox"]),
                   tuple(float(v) for v in d["centroid"]))


@dataclass(frozen=True)
class FaceCandidateRule:
    golden_ratio: float = GOLDEN_RATIO
    tolerance: float = 0.65
    min_area: int = 400

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.min_area < 1:
            raise ValueError("min_area must be at least 1")

    def accepts(self, region):
        ratio = region.height / region.width
        return (region.area >= self.min_area
                and self.golden_ratio - self.tolerance <= ratio <= self.golden_ratio + self.tolerance)


class _UnionFind:
    def __init__(self):
        self.parent = []

    def make(self):
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def find(self, a):
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the older run as root so roots follow scan order
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def _row_runs(mask):
    """Runs of set pixels per row as (row, start, end) with inclusive ends."""
    h, w = mask.shape
    padded = np.zeros((h, w + 2), dtype=np.int8)
    padded[:, 1:-1] = mask
    d = np.diff(padded, axis=1)
    rs, starts = np.nonzero(d == 1)
    re_, ends = np.nonzero(d == -1)
    # nonzero scans row-major, so starts and ends pair up in order
    return rs, starts, ends - 1


def label_components(mask, connectivity=8):
    """Label connected set pixels.

    Two-pass union-find over row runs.  Returns ``(labels, regions)`` where
    labels 1..K are assigned in order of decreasing area (ties: smaller
    min_y, then smaller min_x, then first-scan order) and ``regions[i]`` has
    label ``i + 1``.
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    rows, starts, ends = _row_runs(mask)
    n_runs = len(rows)
    labels = np.zeros((h, w), dtype=np.int32)
    if n_runs == 0:
        return labels, []

    uf = _UnionFind()
    for _ in range(n_runs):
        uf.make()
    reach = 1 if connectivity == 8 else 0
    row_bounds = np.searchsorted(rows, np.arange(h + 1))
    rows_l, starts_l, ends_l = rows.tolist(), starts.tolist(), ends.tolist()
    for y in range(1, h):
        a, a_end = row_bounds[y - 1], row_bounds[y]
        b, b_end = row_bounds[y], row_bounds[y + 1]
        if a == a_end or b == b_end:
            continue
        i, j = a, b
        while i < a_end and j < b_end:
            if starts_l[i] <= ends_l[j] + reach and ends_l[i] + reach >= starts_l[j]:
                uf.union(i, j)
            # advance whichever run finishes first
            if ends_l[i] < ends_l[j]:
                i += 1
            else:
                j += 1

    roots = np.array([uf.find(r) for r in range(n_runs)])
    root_ids, provisional = np.unique(roots, return_inverse=True)
    k = len(root_ids)

    run_len = ends - starts + 1
    area = np.bincount(provisional, weights=run_len, minlength=k)
    # sum of x over a run [s, e] is (s + e) * len / 2
    sum_x = np.bincount(provisional, weights=(starts + ends) * run_len / 2.0, minlength=k)
    sum_y = np.bincount(provisional, weights=rows * run_len, minlength=k)
    min_x = np.full(k, w)
    max_x = np.full(k, -1)
    min_y = np.full(k, h)
    max_y = np.full(k, -1)
    np.minimum.at(min_x, provisional, starts)
    np.maximum.at(max_x, provisional, ends)
    np.minimum.at(min_y, provisional, rows)
    np.maximum.at(max_y, provisional, rows)

    order = sorted(range(k), key=lambda c: (-area[c], min_y[c], min_x[c], c))
    final = np.empty(k, dtype=np.int32)
    regions = []
    for new_label, c in enumerate(order, start=1):
        final[c] = new_label
        regions.append(Region(
            label=new_label,
            area=int(area[c]),
            bbox=(int(min_x[c]), int(min_y[c]), int(max_x[c]), int(max_y[c])),
            centroid=(float(sum_x[c] / area[c]), float(sum_y[c] / area[c])),
        ))
    run_labels = final[provisional]
    for r, s, e, lab in zip(rows_l, starts_l, ends_l, run_labels.tolist()):
        labels[r, s:e + 1] = lab
    return labels, regions


def face_candidates(regions, rule=None):
    rule = rule or FaceCandidateRule()
    return [r for r in regions if rule.accepts(r)]
