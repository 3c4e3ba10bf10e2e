"""Weighted K-means, cluster-count selection and three-class face segmentation.

The clustering objective is the weighted sum of squared distances

    ss = sum_i w_i * ||x_i - c(x_i)||^2

and its degrees-of-freedom normalized form

    mse = ss / ((N - c) * b)

with N the total weight, c the number of non-empty clusters and b the point
dimension (number of bands).  ``distinct_kmeans`` scans a range of cluster
counts and keeps the run with the smallest ``mse``.

Random restarts draw from numpy's PCG64 generator seeded with the
``(seed, k, restart)`` triple, so results reproduce across platforms.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .imaging import as_gray
from .regions import label_components

log = logging.getLogger(__name__)

MAX_ITERATIONS = 300
NMS_RADIUS = 8
HISTOGRAM_BINS = 256


@dataclass(frozen=True)
class WeightedPoints:
    points: np.ndarray  # (n, d)
    weights: np.ndarray  # (n,)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        wts = np.asarray(self.weights, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValueError("points must be an (n, d) array with d >= 1")
        if wts.shape != (pts.shape[0],):
            raise ValueError("weights must have one entry per point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if np.any(wts < 0) or not np.any(wts > 0):
            raise ValueError("weights must be non-negative with at least one positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    @classmethod
    def unweighted(cls, points):
        pts = np.asarray(points, dtype=np.float64)
        return cls(pts, np.ones(pts.shape[0]))

    @property
    def bands(self):
        return self.points.shape[1]

    @property
    def total_weight(self):
        return float(self.weights.sum())


@dataclass
class Clustering:
    k: int
    centers: np.ndarray  # (k, d)
    assignment: np.ndarray  # (n,)
    ss_distances: float
    mse: float
    iterations: int
    mse_defined: bool = True
    ss_history: list = field(default_factory=list)


@dataclass(frozen=True)
class RunRecord:
    k: int
    restart: int
    clusters: int
    iterations: int
    ss: float
    mse: float
    mse_defined: bool

    def to_dict(self):
        return {"k": self.k, "restart": self.restart, "clusters": self.clusters,
                "iterations": self.iterations, "ss": self.ss,
                "mse": self.mse if self.mse_defined else None}


def quality(points, weights, centers, assignment):
    """Return (ss_distances, mse, defined) for a clustering."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    diff = points - centers[assignment]
    ss = float(np.sum(weights * np.sum(diff * diff, axis=1)))
    c = len(np.unique(assignment))
    dof = (float(np.sum(weights)) - c) * points.shape[1]
    if dof <= 0:
        return ss, math.inf, False
    return ss, ss / dof, True


# ---------------------------------------------------------------------------
# Initialization

def _peak_bins(counts, k, radius=NMS_RADIUS):
    """Highest-count bins with non-maximum suppression, ties to lower bins."""
    order = sorted(np.nonzero(counts > 0)[0], key=lambda i: (-counts[i], i))
    chosen = []
    for i in order:
        if all(abs(i - j) > radius for j in chosen):
            chosen.append(i)
            if len(chosen) == k:
                break
    return sorted(chosen)


def _weighted_quantiles(values, weights, k):
    order = np.argsort(values, kind="stable")
    v, cw = values[order], np.cumsum(weights[order])
    levels = (np.arange(k) + 0.5) / k * cw[-1]
    idx = np.searchsorted(cw, levels, side="left")
    return v[np.minimum(idx, len(v) - 1)]


def _histogram_centers(values, weights, k, lo, hi):
    if hi > lo:
        bins = np.clip(np.round((values - lo) / (hi - lo) * (HISTOGRAM_BINS - 1)),
                       0, HISTOGRAM_BINS - 1).astype(np.intp)
    else:
        bins = np.zeros(len(values), dtype=np.intp)
    counts = np.bincount(bins, weights=weights, minlength=HISTOGRAM_BINS)
    peaks = _peak_bins(counts, k)
    if len(peaks) < k:
        log.info("histogram init: %d peaks for k=%d, using quantiles", len(peaks), k)
        return np.sort(_weighted_quantiles(values, weights, k)), True
    step = (hi - lo) / (HISTOGRAM_BINS - 1) if hi > lo else 0.0
    return lo + np.array(peaks, dtype=np.float64) * step, False


def histogram_init(img, k):
    """Initial intensity centers from the peaks of a 256-bin histogram.

    Peaks closer than 8 bins to a stronger one are suppressed.  When fewer
    than ``k`` peaks survive, ``k`` evenly spaced quantiles of the intensity
    distribution are returned instead.  Centers are sorted ascending.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    values = as_gray(img).ravel()
    centers, _ = _histogram_centers(values, np.ones_like(values), k, 0.0, 255.0)
    return centers


def default_init(data, k):
    """Deterministic first-restart centers for arbitrary weighted data.

    1-D data use histogram peaks over the data range; higher dimensions take
    weighted quantile points along the principal axis.
    """
    pts, wts = data.points, data.weights
    if data.bands == 1:
        vals = pts[:, 0]
        lo, hi = float(vals.min()), float(vals.max())
        if lo >= 0 and hi <= 255:
            lo, hi = 0.0, 255.0
        centers, _ = _histogram_centers(vals, wts, k, lo, hi)
        return centers[:, None]
    mean = np.average(pts, axis=0, weights=wts)
    centered = pts - mean
    cov = (centered * wts[:, None]).T @ centered
    _, vecs = np.linalg.eigh(cov)
    axis = vecs[:, -1]
    # fix the eigenvector sign so the init is platform independent
    if axis[np.argmax(np.abs(axis))] < 0:
        axis = -axis
    proj = centered @ axis
    order = np.argsort(proj, kind="stable")
    cw = np.cumsum(wts[order])
    levels = (np.arange(k) + 0.5) / k * cw[-1]
    idx = np.minimum(np.searchsorted(cw, levels, side="left"), len(order) - 1)
    return pts[order[idx]].copy()


def _random_init(data, k, rng):
    pts = data.points[data.weights > 0]
    uniq = np.unique(pts, axis=0)
    if len(uniq) >= k:
        pick = rng.choice(len(uniq), size=k, replace=False)
        return uniq[np.sort(pick)].copy()
    extra = uniq[rng.choice(len(uniq), size=k - len(uniq), replace=True)]
    return np.vstack([uniq, extra])


# ---------------------------------------------------------------------------
# Lloyd iterations

def _nearest(points, centers):
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1), d2


def kmeans(data, init, max_iter=MAX_ITERATIONS):
    """Weighted Lloyd iterations from the given initial centers.

    Stops when the assignment no longer changes.  A cluster left without
    weight is re-seeded at the point farthest from its current center;
    clusters that stay empty are dropped, so ``k`` counts non-empty clusters.
    """
    pts, wts = data.points, data.weights
    centers = np.array(init, dtype=np.float64)
    if centers.ndim == 1:
        centers = centers[:, None]
    if centers.shape[0] < 1:
        raise ValueError("need at least one initial center")
    if centers.shape[1] != pts.shape[1]:
        raise ValueError(f"centers have dimension {centers.shape[1]}, data {pts.shape[1]}")
    k = centers.shape[0]

    assign, d2 = _nearest(pts, centers)
    history = [float(np.sum(wts * d2[np.arange(len(pts)), assign]))]
    iterations = 0
    for iterations in range(1, max_iter + 1):
        mass = np.bincount(assign, weights=wts, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, assign, pts * wts[:, None])
        filled = mass > 0
        centers[filled] = sums[filled] / mass[filled, None]

        empty = np.nonzero(~filled)[0]
        if len(empty):
            own = ((pts - centers[assign]) ** 2).sum(axis=1)
            own[wts <= 0] = -1.0
            for c, idx in zip(empty, np.argsort(-own, kind="stable")):
                if own[idx] <= 0:
                    break
                centers[c] = pts[idx]

        new_assign, d2 = _nearest(pts, centers)
        history.append(float(np.sum(wts * d2[np.arange(len(pts)), new_assign])))
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign

    mass = np.bincount(assign, weights=wts, minlength=k)
    keep = np.nonzero(mass > 0)[0]
    remap = np.full(k, -1)
    remap[keep] = np.arange(len(keep))
    centers = centers[keep]
    assign = remap[assign]
    ss, mse, defined = quality(pts, wts, centers, assign)
    if not defined:
        log.debug("mse undefined: total weight %.3g with %d clusters", wts.sum(), len(keep))
    return Clustering(
        k=len(keep), centers=centers, assignment=assign, ss_distances=ss,
        mse=mse, iterations=iterations, mse_defined=defined, ss_history=history,
    )


def _run_key(clust, k_requested):
    return (not clust.mse_defined, clust.mse, clust.k, k_requested, clust.ss_distances)


def distinct_kmeans(data, k_min, k_max, restarts=5, seed=0, run_log=None):
    """Select the cluster count in ``[k_min, k_max]`` minimizing ``mse``.

    Each ``k`` gets ``restarts`` runs: the first from ``default_init``, the
    rest from distinct random data points.  Ties prefer fewer clusters, then
    smaller ``ss``.  If ``run_log`` is a list, one ``RunRecord`` per run is
    appended to it.
    """
    if not 1 <= k_min <= k_max:
        raise ValueError(f"need 1 <= k_min <= k_max, got {k_min}, {k_max}")
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    best = best_key = None
    for k in range(k_min, k_max + 1):
        for r in range(restarts):
            if r == 0:
                init = default_init(data, k)
            else:
                rng = np.random.default_rng([seed, k, r])
                init = _random_init(data, k, rng)
            clust = kmeans(data, init)
            if run_log is not None:
                run_log.append(RunRecord(k, r, clust.k, clust.iterations,
                                         clust.ss_distances, clust.mse, clust.mse_defined))
            key = _run_key(clust, k)
            if best is None or key < best_key:
                best, best_key = clust, key
    return best


# ---------------------------------------------------------------------------
# Face segmentation

@dataclass
class SegmentedFace:
    class_map: np.ndarray  # (h, w) ints, 0 = darkest class
    class_centers: np.ndarray  # ascending intensities
    selected_class: int
    components: list
    degenerate: bool = False
    origin: tuple = (0, 0)  # crop top-left in source image coordinates

    @property
    def selected_mask(self):
        return self.class_map == self.selected_class


def segment_face(face, seed=0, classes=3):
    """Cluster crop intensities into ``classes`` groups; pick the darkest.

    The histogram of rounded intensities is clustered (bin values weighted by
    counts), every pixel inherits its bin's class, and the darkest class is
    labeled into 8-connected components.  ``seed`` is accepted for interface
    symmetry; the histogram initialization is deterministic.
    """
    face = as_gray(face)
    if face.size == 0:
        raise ValueError("empty face crop")
    bins = np.clip(np.floor(face + 0.5), 0, 255).astype(np.intp)
    counts = np.bincount(bins.ravel(), minlength=256)
    occupied = np.nonzero(counts)[0]
    data = WeightedPoints(occupied.astype(np.float64), counts[occupied].astype(np.float64))

    init = histogram_init(bins.astype(np.float64), classes)
    clust = kmeans(data, init)
    order = np.argsort(clust.centers[:, 0], kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    bin_class = np.zeros(256, dtype=np.intp)
    bin_class[occupied] = rank[clust.assignment]
    class_map = bin_class[bins]

    degenerate = len(occupied) < classes or clust.k < classes
    if degenerate:
        log.info("degenerate segmentation: %d distinct intensities, %d classes",
                 len(occupied), clust.k)
    _, components = label_components(class_map == 0, connectivity=8)
    return SegmentedFace(
        class_map=class_map,
        class_centers=clust.centers[order, 0],
        selected_class=0,
        components=components,
        degenerate=degenerate,
    )
