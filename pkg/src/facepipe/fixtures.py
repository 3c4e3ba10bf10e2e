"""Synthetic face images with exact ground truth.

A fixture is a skin-colored ellipse on a non-skin background carrying dark
blobs for the eyes, the nose and the mouth.  Feature offsets are given in the
face frame as fractions of the ellipse semi-axes, then the whole face is
rotated in-plane by ``rotation`` radians (raster convention, see
``facepipe.imaging``).
"""

import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .imaging import LUMA_WEIGHTS, rotate_point
from .regions import GOLDEN_RATIO
from .skin import is_skin, skin_mask


class FixtureError(ValueError):
    pass


def _luma(rgb):
    return sum(w * c for w, c in zip(LUMA_WEIGHTS, rgb))


@dataclass(frozen=True)
class FaceFixtureSpec:
    canvas: tuple = (200, 240)
    center: tuple = (100.0, 120.0)
    axes: tuple = (40.0, 60.0)  # horizontal, vertical semi-axes
    skin_color: tuple = (224, 172, 140)
    background: tuple = (60, 120, 200)
    feature_color: tuple = (50, 30, 30)
    eye_offset: tuple = (0.4, -0.2)  # right eye; the left one is mirrored
    eye_radius: float = 0.13  # fraction of the horizontal semi-axis
    nose_offset: tuple = (0.0, 0.12)
    nose_radius: float = 0.08
    mouth_offset: tuple = (0.0, 0.42)
    mouth_radii: tuple = (0.3, 0.08)  # fractions of (horizontal, vertical) semi-axes
    rotation: float = 0.0
    texture: int = 0  # amplitude of seeded skin noise
    seed: int = 0

    def to_dict(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


@dataclass(frozen=True)
class FixtureTruth:
    eye_left: tuple
    eye_right: tuple
    nose: tuple
    mouth: tuple
    rotation: float
    inter_eye_distance: float
    nose_length: float
    mouth_offset: tuple  # mouth minus eye midpoint, face frame
    mouth_area: float
    face_bbox: tuple  # analytic (min_x, min_y, max_x, max_y)


def load_fixture_spec(path):
    return FaceFixtureSpec.from_dict(json.loads(Path(path).read_text()))


def _half_extents(spec):
    a, b = spec.axes
    c, s = math.cos(spec.rotation), math.sin(spec.rotation)
    return math.sqrt((a * c) ** 2 + (b * s) ** 2), math.sqrt((a * s) ** 2 + (b * c) ** 2)


def validate_spec(spec, tolerance=0.65):
    a, b = spec.axes
    if a <= 0 or b <= 0:
        raise FixtureError("axes must be positive")
    if not is_skin(*spec.skin_color):
        raise FixtureError(f"skin color {spec.skin_color} fails the skin rule")
    if is_skin(*spec.background):
        raise FixtureError(f"background {spec.background} passes the skin rule")
    if is_skin(*spec.feature_color):
        raise FixtureError("feature color must not be skin")
    dark = _luma(spec.feature_color)
    if dark + 40 > min(_luma(spec.skin_color), _luma(spec.background)):
        raise FixtureError("feature color is not clearly darker than skin and background")
    hw, hh = _half_extents(spec)
    ratio = hh / hw
    if not GOLDEN_RATIO - tolerance < ratio < GOLDEN_RATIO + tolerance:
        raise FixtureError(f"face bbox ratio {ratio:.3f} outside the golden band")
    _check_inside(spec, spec.center)
    for (u, v), (ru, rv) in _blobs(spec):
        if (abs(u) + ru) / a > 1 or (abs(v) + rv) / b > 1 or (u / a) ** 2 + (v / b) ** 2 > 0.8:
            raise FixtureError("feature blob reaches outside the face ellipse")


def _check_inside(spec, center):
    w, h = spec.canvas
    hw, hh = _half_extents(spec)
    if center[0] - hw < 1 or center[0] + hw > w - 2 or center[1] - hh < 1 or center[1] + hh > h - 2:
        raise FixtureError(f"face centered at {center} leaves the {w}x{h} canvas")


def _blobs(spec):
    """Face-frame (center, radii) pairs: left eye, right eye, nose, mouth."""
    a, b = spec.axes
    ex, ey = spec.eye_offset
    er = spec.eye_radius * a
    nr = spec.nose_radius * a
    return [
        ((-ex * a, ey * b), (er, er)),
        ((ex * a, ey * b), (er, er)),
        ((spec.nose_offset[0] * a, spec.nose_offset[1] * b), (nr, nr)),
        ((spec.mouth_offset[0] * a, spec.mouth_offset[1] * b),
         (spec.mouth_radii[0] * a, spec.mouth_radii[1] * b)),
    ]


def _render(spec, center):
    w, h = spec.canvas
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[:] = spec.background
    gx, gy = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    c, s = math.cos(spec.rotation), math.sin(spec.rotation)
    dx, dy = gx - center[0], gy - center[1]
    # face-frame coordinates: inverse rotation of the pixel offset
    u = c * dx + s * dy
    v = -s * dx + c * dy
    a, b = spec.axes
    face = (u / a) ** 2 + (v / b) ** 2 <= 1.0
    skin = np.broadcast_to(np.array(spec.skin_color, dtype=np.int16), (h, w, 3)).copy()
    if spec.texture:
        rng = np.random.default_rng(spec.seed)
        skin += rng.integers(-spec.texture, spec.texture + 1, size=(h, w, 1), dtype=np.int16)
        skin = np.clip(skin, 0, 255)
    img[face] = skin[face].astype(np.uint8)
    feature = np.zeros((h, w), dtype=bool)
    for (bu, bv), (ru, rv) in _blobs(spec):
        feature |= ((u - bu) / ru) ** 2 + ((v - bv) / rv) ** 2 <= 1.0
    img[feature] = spec.feature_color
    return img, face & ~feature


def render_fixture(spec=None):
    """Render a fixture; returns ``(rgb_image, FixtureTruth)``."""
    spec = spec or FaceFixtureSpec()
    validate_spec(spec)
    img, skin_region = _render(spec, spec.center)
    mask = skin_mask(img)
    if not np.array_equal(mask, skin_region):
        raise FixtureError("texture pushes skin pixels outside the skin rule")

    to_image = lambda p: rotate_point((spec.center[0] + p[0], spec.center[1] + p[1]),  # noqa: E731
                                      spec.rotation, spec.center)
    blobs = _blobs(spec)
    (le, _), (re_, _), (no, _), (mo, (mru, mrv)) = blobs
    mid = ((le[0] + re_[0]) / 2, (le[1] + re_[1]) / 2)
    hw, hh = _half_extents(spec)
    truth = FixtureTruth(
        eye_left=to_image(le), eye_right=to_image(re_), nose=to_image(no), mouth=to_image(mo),
        rotation=spec.rotation,
        inter_eye_distance=math.hypot(re_[0] - le[0], re_[1] - le[1]),
        nose_length=no[1] - mid[1],
        mouth_offset=(mo[0] - mid[0], mo[1] - mid[1]),
        mouth_area=math.pi * mru * mrv,
        face_bbox=(spec.center[0] - hw, spec.center[1] - hh,
                   spec.center[0] + hw, spec.center[1] + hh),
    )
    return img, truth


def render_sequence(spec, frames, velocity):
    """Frames of the fixture translating by ``velocity`` pixels per frame."""
    validate_spec(spec)
    out = []
    for t in range(frames):
        center = (spec.center[0] + t * velocity[0], spec.center[1] + t * velocity[1])
        _check_inside(spec, center)
        out.append(_render(spec, center)[0])
    return out


def random_spec(rng, canvas=(200, 240)):
    """A fixture with randomized rotation, size, aspect and position."""
    a = rng.uniform(30.0, 44.0)
    b = a * rng.uniform(1.35, 1.65)
    rot = rng.uniform(-0.4, 0.4)
    spec = FaceFixtureSpec(canvas=canvas, axes=(a, b), rotation=rot)
    hw, hh = _half_extents(spec)
    cx = rng.uniform(hw + 3, canvas[0] - hw - 3)
    cy = rng.uniform(hh + 3, canvas[1] - hh - 3)
    return replace(spec, center=(cx, cy))


def fixture_corpus(n, seed=0, canvas=(200, 240)):
    rng = np.random.default_rng(seed)
    return [random_spec(rng, canvas) for _ in range(n)]
