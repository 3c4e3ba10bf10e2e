"""Gaussian radial-basis-function network.

Hidden units respond with ``exp(-||x - c||^2 / r^2)``.  Centers come from
unsupervised K-means, radii from the distance to the nearest other center,
and the linear output layer (with bias) from a ridge least-squares fit to
one-hot class targets.
"""

from dataclasses import dataclass

import numpy as np

from .clustering import WeightedPoints, distinct_kmeans

RADIUS_FLOOR = 1e-6
RIDGE = 1e-6


class TrainingError(ValueError):
    pass


@dataclass(frozen=True)
class RbfUnit:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.float64)
        if not np.all(np.isfinite(c)):
            raise ValueError("unit center must be finite")
        if not self.radius > 0:
            raise ValueError("unit radius must be positive")
        object.__setattr__(self, "center", c)


def rbf_response(x, unit):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != unit.center.shape:
        raise ValueError(f"input shape {x.shape} does not match center {unit.center.shape}")
    d = x - unit.center
    return float(np.exp(-np.dot(d, d) / unit.radius ** 2))


def _values(x):
    return np.asarray(x.values if hasattr(x, "values") else x, dtype=np.float64)


@dataclass
class RbfNetwork:
    units: list
    output_weights: np.ndarray  # (classes, units + 1), last column is bias
    class_labels: list

    def __post_init__(self):
        # contiguous so reloaded models reproduce scores bit for bit
        self.output_weights = np.ascontiguousarray(self.output_weights, dtype=np.float64)
        if not self.units:
            raise ValueError("network needs at least one unit")
        if len(set(self.class_labels)) != len(self.class_labels):
            raise ValueError("class labels must be unique")
        if self.output_weights.shape != (len(self.class_labels), len(self.units) + 1):
            raise ValueError("output weight matrix has inconsistent shape")
        self._centers = np.stack([u.center for u in self.units])
        self._radii = np.array([u.radius for u in self.units])

    @property
    def dims(self):
        return self._centers.shape[1]

    def activations(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dims:
            raise ValueError(f"expected {self.dims} features, got {X.shape[1]}")
        d2 = ((X[:, None, :] - self._centers[None]) ** 2).sum(axis=2)
        return np.exp(-d2 / self._radii ** 2)

    def design(self, X):
        act = self.activations(X)
        return np.hstack([act, np.ones((act.shape[0], 1))])

    def scores(self, X):
        return self.design(X) @ self.output_weights.T

    def to_dict(self):
        return {
            "units": [{"center": u.center.tolist(), "radius": u.radius} for u in self.units],
            "output_weights": self.output_weights.tolist(),
            "class_labels": list(self.class_labels),
        }

    @classmethod
    def from_dict(cls, d):
        units = [RbfUnit(np.array(u["center"], dtype=np.float64), float(u["radius"]))
                 for u in d["units"]]
        return cls(units, np.array(d["output_weights"], dtype=np.float64),
                   list(d["class_labels"]))


def classify(net, x):
    """Return ``(label, scores)``; ties go to the earlier class label."""
    s = net.scores(_values(x)[None, :])[0]
    return net.class_labels[int(np.argmax(s))], s


def _split(train):
    X = np.stack([_values(x) for x, _ in train])
    y = [str(label) for _, label in train]
    return X, y


def train_rbf(train, num_units, seed=0, restarts=5):
    """Fit a network on ``(features, label)`` pairs."""
    if not train:
        raise TrainingError("empty training set")
    X, y = _split(train)
    labels = sorted(set(y))
    if len(labels) < 2:
        raise TrainingError("need at least two classes")
    if not 1 <= num_units <= len(train):
        raise TrainingError(f"num_units={num_units} must lie in [1, {len(train)}]")
    if np.all(X == X[0]):
        raise TrainingError("all training features are identical")

    clust = distinct_kmeans(WeightedPoints.unweighted(X), num_units, num_units,
                            restarts=restarts, seed=seed)
    centers = clust.centers
    if len(centers) == 1:
        radii = [max(float(np.mean(np.linalg.norm(X - centers[0], axis=1))), RADIUS_FLOOR)]
    else:
        dc = np.linalg.norm(centers[:, None] - centers[None], axis=2)
        np.fill_diagonal(dc, np.inf)
        radii = [max(float(r), RADIUS_FLOOR) for r in dc.min(axis=1)]
    units = [RbfUnit(c.copy(), r) for c, r in zip(centers, radii)]

    targets = np.zeros((len(y), len(labels)))
    index = {lab: i for i, lab in enumerate(labels)}
    for row, lab in enumerate(y):
        targets[row, index[lab]] = 1.0
    placeholder = RbfNetwork(units, np.zeros((len(labels), len(units) + 1)), labels)
    H = placeholder.design(X)
    weights = solve_ridge(H, targets)
    return RbfNetwork(units, weights.T, labels)


def solve_ridge(H, T, lam=RIDGE):
    """Solve ``(H^T H + lam I) W = H^T T`` for ``W``."""
    A = H.T @ H + lam * np.eye(H.shape[1])
    return np.linalg.solve(A, H.T @ T)


def training_accuracy(net, train):
    X, y = _split(train)
    s = net.scores(X)
    pred = [net.class_labels[i] for i in np.argmax(s, axis=1)]
    return float(np.mean([p == t for p, t in zip(pred, y)]))
