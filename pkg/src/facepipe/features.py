"""Eye, nose and mouth localization and feature vector assembly."""

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .clustering import SegmentedFace
from .dct import dct2, truncate_block
from .imaging import as_gray, resize_bilinear, rotate_about, rotate_point, to_gray
from .regions import label_components

DCT_INPUT_SIZE = 64
GEOMETRY_FIELDS = ("inter_eye_distance", "nose_length", "mouth_x", "mouth_y",
                   "mouth_area", "face_area")


class LocalizationError(Exception):
    """A feature-location stage could not produce a result."""

    def __init__(self, stage, reason):
        super().__init__(f"{stage}: {reason}")
        self.stage = stage
        self.reason = reason


@dataclass(frozen=True)
class FeatureConfig:
    # component area as a fraction of the face (skin region) area
    eye_area_band: tuple = (0.001, 0.05)
    eye_area_ratio: float = 3.0
    # max |dy| between eyes as a fraction of face bbox height
    eye_dy_fraction: float = 0.25
    min_feature_fraction: float = 0.001
    # nose/mouth must sit this fraction of the eye distance below the eye line
    eye_line_gap: float = 0.1

    def to_dict(self):
        return {"eye_area_band": list(self.eye_area_band),
                "eye_area_ratio": self.eye_area_ratio,
                "eye_dy_fraction": self.eye_dy_fraction,
                "min_feature_fraction": self.min_feature_fraction,
                "eye_line_gap": self.eye_line_gap}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "eye_area_band" in d:
            d["eye_area_band"] = tuple(float(v) for v in d["eye_area_band"])
        return cls(**d)


@dataclass(frozen=True)
class FaceGeometry:
    """Located facial features in the orientation-corrected crop frame."""

    eye_left: tuple
    eye_right: tuple
    inter_eye_distance: float
    nose_tip: tuple
    nose_length: float
    mouth_center: tuple
    mouth_area: int
    face_area: int
    rotation_applied: float
    face_width: int
    face_height: int

    def to_dict(self):
        return {
            "eye_left": list(self.eye_left),
            "eye_right": list(self.eye_right),
            "inter_eye_distance": self.inter_eye_distance,
            "nose_tip": list(self.nose_tip),
            "nose_length": self.nose_length,
            "mouth_center": list(self.mouth_center),
            "mouth_area": self.mouth_area,
            "face_area": self.face_area,
            "rotation_applied": self.rotation_applied,
            "face_width": self.face_width,
            "face_height": self.face_height,
        }

    @classmethod
    def from_dict(cls, d):
        pt = lambda v: (float(v[0]), float(v[1]))  # noqa: E731
        return cls(
            eye_left=pt(d["eye_left"]), eye_right=pt(d["eye_right"]),
            inter_eye_distance=float(d["inter_eye_distance"]),
            nose_tip=pt(d["nose_tip"]), nose_length=float(d["nose_length"]),
            mouth_center=pt(d["mouth_center"]), mouth_area=int(d["mouth_area"]),
            face_area=int(d["face_area"]),
            rotation_applied=float(d["rotation_applied"]),
            face_width=int(d["face_width"]), face_height=int(d["face_height"]),
        )

    def normalized(self):
        """The six scale-free geometry features.

        Lengths are divided by the face bbox diagonal and areas by its square.
        The mouth position is measured from the left eye.
        """
        diag = math.hypot(self.face_width, self.face_height)
        return np.array([
            self.inter_eye_distance / diag,
            self.nose_length / diag,
            (self.mouth_center[0] - self.eye_left[0]) / diag,
            (self.mouth_center[1] - self.eye_left[1]) / diag,
            self.mouth_area / diag ** 2,
            self.face_area / diag ** 2,
        ])


@dataclass
class FeatureVector:
    geometry: np.ndarray
    dct: np.ndarray
    label: object = None
    dct_k: int = field(init=False)

    def __post_init__(self):
        self.geometry = np.asarray(self.geometry, dtype=np.float64)
        self.dct = np.asarray(self.dct, dtype=np.float64)
        if self.geometry.shape != (len(GEOMETRY_FIELDS),):
            raise ValueError("geometry must hold six values")
        k = math.isqrt(self.dct.size)
        if k * k != self.dct.size:
            raise ValueError("dct part must hold k*k coefficients")
        self.dct_k = k
        if not (np.all(np.isfinite(self.geometry)) and np.all(np.isfinite(self.dct))):
            raise ValueError("feature vector entries must be finite")

    @property
    def values(self):
        return np.concatenate([self.geometry, self.dct])

    def __len__(self):
        return self.geometry.size + self.dct.size

    def to_dict(self):
        return {"geometry": self.geometry.tolist(), "dct_k": self.dct_k,
                "dct": self.dct.tolist(), "label": self.label}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["geometry"], dtype=np.float64),
                   np.array(d["dct"], dtype=np.float64), d.get("label"))


def locate_eyes(seg, face_bbox, cfg=None):
    """Pick the eye pair among dark components in the upper half of the face.

    Candidates are darkest-class components whose centroid lies in the upper
    half of ``face_bbox`` and whose area is inside the configured band of the
    face area.  Among pairs with area ratio <= 3 and vertical offset <= 25% of
    the face height, the widest horizontal separation wins.  Returned points
    are in crop coordinates, left eye first.
    """
    cfg = cfg or FeatureConfig()
    if seg.degenerate:
        raise LocalizationError("eyes", "degenerate segmentation")
    ox, oy = seg.origin
    min_x, min_y, max_x, max_y = face_bbox.bbox
    height = max_y - min_y + 1
    mid_y = min_y + height / 2.0
    lo, hi = cfg.eye_area_band
    cands = [c for c in seg.components
             if c.centroid[1] + oy < mid_y
             and lo <= c.area / face_bbox.area <= hi]
    if len(cands) < 2:
        raise LocalizationError("eyes", f"{len(cands)} candidate component(s) in upper half")

    best = best_key = None
    for a, b in combinations(cands, 2):
        left, right = sorted((a, b), key=lambda c: c.centroid)
        dx = right.centroid[0] - left.centroid[0]
        dy = abs(right.centroid[1] - left.centroid[1])
        if max(a.area, b.area) > cfg.eye_area_ratio * min(a.area, b.area):
            continue
        if dy > cfg.eye_dy_fraction * height:
            continue
        key = (-dx, dy, left.centroid, right.centroid)
        if best_key is None or key < best_key:
            best, best_key = (left.centroid, right.centroid), key
    if best is None:
        raise LocalizationError("eyes", "no component pair satisfies the eye constraints")
    return best


def correct_orientation(face, eyes):
    """Rotate the crop so the eye line becomes horizontal.

    Returns ``(rotated, (left, right), angle)`` where ``angle`` is the
    measured tilt of the eye line; the image is rotated by ``-angle`` about
    the eye midpoint.
    """
    (x1, y1), (x2, y2) = eyes
    dx, dy = x2 - x1, y2 - y1
    if dx == 0 and dy == 0:
        raise LocalizationError("orientation", "coincident eye centers")
    angle = math.atan2(dy, dx)
    mid = ((x1 + x2) / 2.0, (y1 + y2) / 2.0)
    rotated = rotate_about(face, -angle, mid)
    new_eyes = (rotate_point(eyes[0], -angle, mid), rotate_point(eyes[1], -angle, mid))
    return rotated, new_eyes, angle


def rotate_segmentation(seg, rotation, center):
    """Rotate a segmentation's class map and relabel the darkest class.

    Each class indicator is rotated bilinearly and every pixel takes the
    class with the largest resampled weight; fill counts toward the
    brightest class.
    """
    n = int(seg.class_map.max()) + 1 if seg.class_map.size else 1
    n = max(n, len(seg.class_centers))
    stack = []
    for c in range(n):
        fill = 1.0 if c == n - 1 else 0.0
        stack.append(rotate_about((seg.class_map == c).astype(np.float64),
                                  rotation, center, fill=fill))
    class_map = np.argmax(np.stack(stack), axis=0)
    _, components = label_components(class_map == seg.selected_class, connectivity=8)
    return SegmentedFace(class_map=class_map, class_centers=seg.class_centers,
                         selected_class=seg.selected_class, components=components,
                         degenerate=seg.degenerate, origin=seg.origin)


def locate_nose_mouth(seg, eyes, face_area, cfg=None):
    """Find nose and mouth below the (horizontal) eye line.

    Searches the vertical strip centered on the eye midpoint whose width is
    the inter-eye distance.  The highest qualifying component is the nose,
    the next one down the mouth.  ``seg`` is a segmentation of the corrected
    crop or a plain list of its dark-class regions.

    Returns ``(nose_tip, nose_length, mouth_center, mouth_area)``.
    """
    cfg = cfg or FeatureConfig()
    components = seg.components if isinstance(seg, SegmentedFace) else seg
    (x1, y1), (x2, y2) = eyes
    dist = math.hypot(x2 - x1, y2 - y1)
    mid_x, eye_y = (x1 + x2) / 2.0, (y1 + y2) / 2.0
    below = eye_y + cfg.eye_line_gap * dist
    cands = sorted(
        (c for c in components
         if abs(c.centroid[0] - mid_x) < dist / 2.0
         and c.centroid[1] > below
         and c.area >= cfg.min_feature_fraction * face_area),
        key=lambda c: (c.centroid[1], c.centroid[0]),
    )
    if not cands:
        raise LocalizationError("nose", "no component below the eye line in the center strip")
    nose = cands[0]
    rest = [c for c in cands[1:] if c.centroid[1] > nose.centroid[1]]
    if not rest:
        raise LocalizationError("mouth", "no component below the nose")
    mouth = rest[0]
    return nose.centroid, nose.centroid[1] - eye_y, mouth.centroid, mouth.area


def build_feature_vector(face, geometry, dct_k=64, label=None):
    """Concatenate normalized geometry with truncated DCT coefficients.

    ``face`` may be an RGB or gray crop; it is resized to 64x64 before the
    transform.
    """
    if geometry is None:
        raise ValueError("feature vector needs complete geometry")
    face = np.asarray(face)
    gray = to_gray(face) if face.ndim == 3 else as_gray(face)
    if not 1 <= dct_k <= DCT_INPUT_SIZE:
        raise ValueError(f"dct_k must lie in [1, {DCT_INPUT_SIZE}]")
    block = resize_bilinear(gray, DCT_INPUT_SIZE, DCT_INPUT_SIZE)
    coeffs = truncate_block(dct2(block), dct_k)
    return FeatureVector(geometry.normalized(), coeffs, label)
