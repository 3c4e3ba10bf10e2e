"""Tree-structured classifier built from recursive attractor-basin partitions.

Each internal node splits its training subset into basins; a basin whose
examples share one class becomes a leaf, a mixed basin is partitioned again
with as many basins as it has classes (at least two).  Basins are produced
by a pluggable partitioner, by default the distinct K-means scan over
``k in [2, K]``, and unseen points descend by nearest basin center.
"""

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .clustering import WeightedPoints, distinct_kmeans

DEFAULT_MAX_DEPTH = 32


class KMeansBasinPartitioner:
    """Basins from ``distinct_kmeans`` with ``k_min = 2, k_max = k``."""

    def __init__(self, restarts=5):
        self.restarts = restarts

    def partition(self, points, k, seed):
        clust = distinct_kmeans(WeightedPoints.unweighted(points), 2, max(k, 2),
                                restarts=self.restarts, seed=seed)
        return clust.assignment, clust.centers


@dataclass
class Leaf:
    label: str
    training_count: int
    purity: float


@dataclass
class Internal:
    centers: np.ndarray  # (basins, d)
    children: list

    def route(self, x):
        d2 = ((self.centers - x) ** 2).sum(axis=1)
        return int(np.argmin(d2))


@dataclass
class FmacaTree:
    root: object
    k: int
    depth: int
    node_count: int
    dims: int

    def to_dict(self):
        return {"k": self.k, "depth": self.depth, "node_count": self.node_count,
                "dims": self.dims, "root": _node_to_dict(self.root)}

    @classmethod
    def from_dict(cls, d):
        return cls(_node_from_dict(d["root"]), int(d["k"]), int(d["depth"]),
                   int(d["node_count"]), int(d["dims"]))


def _node_to_dict(node):
    if isinstance(node, Leaf):
        return {"leaf": {"label": node.label, "training_count": node.training_count,
                         "purity": node.purity}}
    return {"internal": {"centers": node.centers.tolist(),
                         "children": [_node_to_dict(c) for c in node.children]}}


def _node_from_dict(d):
    if "leaf" in d:
        leaf = d["leaf"]
        return Leaf(str(leaf["label"]), int(leaf["training_count"]), float(leaf["purity"]))
    node = d["internal"]
    return Internal(np.array(node["centers"], dtype=np.float64),
                    [_node_from_dict(c) for c in node["children"]])


def _majority_leaf(labels):
    counts = Counter(labels)
    # ties resolve to the first label in sorted order
    label = min(counts, key=lambda lab: (-counts[lab], lab))
    return Leaf(label, len(labels), counts[label] / len(labels))


def _child_seed(seed, path):
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


def build_tree(train, K, seed=0, max_depth=DEFAULT_MAX_DEPTH, partitioner=None):
    """Build the tree from ``(features, label)`` pairs with ``K`` root basins."""
    if not train:
        raise ValueError("empty training set")
    if K < 2:
        raise ValueError("K must be at least 2")
    partitioner = partitioner or KMeansBasinPartitioner()
    X = np.stack([np.asarray(getattr(x, "values", x), dtype=np.float64) for x, _ in train])
    y = [str(label) for _, label in train]
    stats = {"depth": 0, "nodes": 0}

    def grow(idx, k, depth, path):
        stats["nodes"] += 1
        stats["depth"] = max(stats["depth"], depth)
        labels = [y[i] for i in idx]
        classes = set(labels)
        if len(classes) == 1:
            return Leaf(labels[0], len(idx), 1.0)
        pts = X[idx]
        if depth >= max_depth or np.all(pts == pts[0]):
            return _majority_leaf(labels)
        assign, centers = partitioner.partition(pts, k, _child_seed(seed, path))
        basins = [np.nonzero(assign == b)[0] for b in range(len(centers))]
        nonempty = [b for b in range(len(centers)) if len(basins[b])]
        if len(nonempty) < 2:
            return _majority_leaf(labels)
        children = []
        for b in nonempty:
            sub = [idx[i] for i in basins[b]]
            k_sub = max(len({y[i] for i in sub}), 2)
            children.append(grow(sub, k_sub, depth + 1, (*path, b)))
        return Internal(np.asarray(centers)[nonempty].copy(), children)

    root = grow(list(range(len(train))), K, 0, ())
    return FmacaTree(root, K, stats["depth"], stats["nodes"], X.shape[1])


def predict(tree, x):
    """Descend to a leaf; returns ``(label, purity)``."""
    x = np.asarray(getattr(x, "values", x), dtype=np.float64)
    if x.shape != (tree.dims,):
        raise ValueError(f"expected {tree.dims} features, got shape {x.shape}")
    node = tree.root
    while isinstance(node, Internal):
        node = node.children[node.route(x)]
    return node.label, node.purity


def tree_stats(tree):
    leaves = []
    per_level = []
    depth = 0
    count = 0
    stack = [(tree.root, 0)]
    while stack:
        node, level = stack.pop()
        count += 1
        depth = max(depth, level)
        while len(per_level) <= level:
            per_level.append(0)
        per_level[level] += 1
        if isinstance(node, Leaf):
            leaves.append(node)
        else:
            stack.extend((c, level + 1) for c in reversed(node.children))
    return {
        "depth": depth,
        "node_count": count,
        "leaf_count": len(leaves),
        "internal_count": count - len(leaves),
        "leaf_purities": [leaf.purity for leaf in leaves],
        "nodes_per_level": per_level,
    }
