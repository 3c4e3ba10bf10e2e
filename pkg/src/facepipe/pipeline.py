"""Frames in, face detections with located features (and labels) out."""

import logging
from dataclasses import dataclass, field, fields

import numpy as np

from . import fmaca, rbf
from .clustering import segment_face
from .features import (
    FaceGeometry, FeatureConfig, LocalizationError, build_feature_vector,
    correct_orientation, locate_eyes, locate_nose_mouth, rotate_segmentation,
)
from .imaging import as_rgb, difference_image, dilate, rotate_point, threshold, to_gray
from .regions import FaceCandidateRule, Region, face_candidates, label_components
from .skin import skin_mask

log = logging.getLogger(__name__)

CLASSIFIERS = ("none", "rbf", "fmaca")
GATING_MODES = ("component", "pixel")


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    tolerance: float = 0.65
    min_area: int = 400
    seed: int = 0
    dct_k: int = 64
    # None: off for stills, on for frame sequences
    motion_gating: object = None
    gating_mode: str = "component"
    motion_threshold: float = 15.0
    motion_dilation: int = 5
    margin: float = 0.05
    classifier: str = "none"
    model_path: object = None
    features: FeatureConfig = field(default_factory=FeatureConfig)

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ConfigError("tolerance must be positive")
        if int(self.min_area) < 1:
            raise ConfigError("min_area must be >= 1")
        if not 1 <= int(self.dct_k) <= 64:
            raise ConfigError("dct_k must lie in [1, 64]")
        if self.motion_gating not in (None, True, False):
            raise ConfigError("motion_gating must be true, false or null")
        if self.gating_mode not in GATING_MODES:
            raise ConfigError(f"gating_mode must be one of {GATING_MODES}")
        if self.motion_threshold < 0 or self.motion_dilation < 0:
            raise ConfigError("motion threshold and dilation must be non-negative")
        if not 0 <= self.margin < 1:
            raise ConfigError("margin must lie in [0, 1)")
        if self.classifier not in CLASSIFIERS:
            raise ConfigError(f"classifier must be one of {CLASSIFIERS}")
        if isinstance(self.features, dict):
            self.features = FeatureConfig.from_dict(self.features)

    @property
    def face_rule(self):
        return FaceCandidateRule(tolerance=self.tolerance, min_area=int(self.min_area))

    def to_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.to_dict() if f.name == "features" else v
        return out

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


@dataclass
class Detection:
    source: object
    face_bbox: Region
    geometry: FaceGeometry = None
    feature: object = None
    failure: dict = None
    landmarks: dict = None  # located features in source image coordinates
    label: object = None
    scores: object = None

    def to_dict(self):
        return {
            "source": self.source,
            "face_bbox": self.face_bbox.to_dict(),
            "failure": self.failure,
            "landmarks": ({k: list(v) for k, v in self.landmarks.items()}
                          if self.landmarks else None),
            "geometry": self.geometry.to_dict() if self.geometry else None,
            "feature": self.feature.to_dict() if self.feature is not None else None,
            "label": self.label,
            "scores": self.scores,
        }

    @classmethod
    def from_dict(cls, d):
        from .features import FeatureVector
        lm = d.get("landmarks")
        return cls(
            source=d["source"],
            face_bbox=Region.from_dict(d["face_bbox"]),
            geometry=FaceGeometry.from_dict(d["geometry"]) if d.get("geometry") else None,
            feature=FeatureVector.from_dict(d["feature"]) if d.get("feature") else None,
            failure=d.get("failure"),
            landmarks={k: tuple(v) for k, v in lm.items()} if lm else None,
            label=d.get("label"),
            scores=d.get("scores"),
        )


def crop_box(region, shape, margin):
    """Bounding box grown by ``margin`` of its size on each side, clipped."""
    h, w = shape[:2]
    min_x, min_y, max_x, max_y = region.bbox
    mx = int(round(margin * region.width))
    my = int(round(margin * region.height))
    return (max(min_x - mx, 0), max(min_y - my, 0),
            min(max_x + mx, w - 1), min(max_y + my, h - 1))


def analyze_face(img, gray, region, cfg, source=None, model=None):
    """Run segmentation, localization and feature extraction on one candidate."""
    det = Detection(source=source, face_bbox=region)
    x0, y0, x1, y1 = crop_box(region, img.shape, cfg.margin)
    crop = gray[y0:y1 + 1, x0:x1 + 1]
    fc = cfg.features
    try:
        seg = segment_face(crop, seed=cfg.seed)
        seg.origin = (x0, y0)
        if seg.degenerate:
            raise LocalizationError("segmentation", "fewer than three intensity classes")
        eyes = locate_eyes(seg, region, fc)
        landmarks = {
            "eye_left": (eyes[0][0] + x0, eyes[0][1] + y0),
            "eye_right": (eyes[1][0] + x0, eyes[1][1] + y0),
        }
        det.landmarks = landmarks
        rotated, new_eyes, angle = correct_orientation(crop, eyes)
        mid = ((eyes[0][0] + eyes[1][0]) / 2.0, (eyes[0][1] + eyes[1][1]) / 2.0)
        rseg = rotate_segmentation(seg, -angle, mid)
        nose, nose_len, mouth, mouth_area = locate_nose_mouth(
            rseg, new_eyes, region.area, fc)
    except LocalizationError as exc:
        det.failure = {"stage": exc.stage, "reason": exc.reason}
        return det

    for name, pt in (("nose_tip", nose), ("mouth_center", mouth)):
        bx, by = rotate_point(pt, angle, mid)
        landmarks[name] = (bx + x0, by + y0)
    dist = float(np.hypot(new_eyes[1][0] - new_eyes[0][0], new_eyes[1][1] - new_eyes[0][1]))
    det.geometry = FaceGeometry(
        eye_left=new_eyes[0], eye_right=new_eyes[1], inter_eye_distance=dist,
        nose_tip=nose, nose_length=float(nose_len), mouth_center=mouth,
        mouth_area=int(mouth_area), face_area=region.area, rotation_applied=float(angle),
        face_width=region.width, face_height=region.height,
    )
    det.feature = build_feature_vector(rotated, det.geometry, cfg.dct_k)
    if model is not None:
        try:
            det.label, det.scores = classify_feature(model, det.feature)
        except ValueError as exc:
            det.failure = {"stage": "classify", "reason": str(exc)}
    return det


def classify_feature(model, feature):
    if isinstance(model, rbf.RbfNetwork):
        label, scores = rbf.classify(model, feature)
        return label, {lab: float(s) for lab, s in zip(model.class_labels, scores)}
    label, purity = fmaca.predict(model, feature)
    return label, {"purity": float(purity)}


def _detect(img, skin, cfg, source, model):
    gray = to_gray(img)
    _, regions = label_components(skin, connectivity=8)
    cands = face_candidates(regions, cfg.face_rule)
    cands.sort(key=lambda r: (r.bbox[1], r.bbox[0]))
    return [analyze_face(img, gray, r, cfg, source, model) for r in cands]


def detect_still(img, cfg=None, model=None, source=None):
    """Detect faces in one RGB image; failures are recorded per detection."""
    cfg = cfg or PipelineConfig()
    img = as_rgb(img)
    return _detect(img, skin_mask(img), cfg, source, model)


def motion_mask(frame, previous, cfg):
    diff = difference_image(to_gray(frame), to_gray(previous))
    return dilate(threshold(diff, cfg.motion_threshold), cfg.motion_dilation)


def gate_skin(skin, motion, mode="component"):
    """Restrict a skin mask to moving parts.

    ``pixel`` keeps skin pixels inside the motion mask; ``component`` keeps
    every 8-connected skin component that touches it.
    """
    if mode == "pixel":
        return skin & motion
    labels, regions = label_components(skin, connectivity=8)
    touched = np.unique(labels[skin & motion])
    return np.isin(labels, touched[touched > 0])


def detect_video(frames, cfg=None, model=None, sources=None):
    """Per-frame detections for an ordered frame sequence.

    With motion gating on, frame 0 is processed ungated and every later
    frame's skin mask is gated by its difference to the previous frame.
    """
    cfg = cfg or PipelineConfig()
    frames = [as_rgb(f) for f in frames]
    if not frames:
        raise ValueError("need at least one frame")
    shape = frames[0].shape
    for i, f in enumerate(frames):
        if f.shape != shape:
            raise ValueError(f"frame {i} has shape {f.shape}, expected {shape}")
    gating = True if cfg.motion_gating is None else cfg.motion_gating
    sources = list(sources) if sources is not None else list(range(len(frames)))
    out = []
    for t, frame in enumerate(frames):
        skin = skin_mask(frame)
        if gating and t > 0:
            skin = gate_skin(skin, motion_mask(frame, frames[t - 1], cfg), cfg.gating_mode)
        out.append(_detect(frame, skin, cfg, sources[t], model))
    return out
