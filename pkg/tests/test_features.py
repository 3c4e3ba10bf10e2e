import math

import numpy as np
import pytest

from facepipe.clustering import segment_face
from facepipe.features import (
    FaceGeometry, FeatureConfig, FeatureVector, LocalizationError, build_feature_vector,
    correct_orientation, locate_eyes, locate_nose_mouth, rotate_segmentation,
)
from facepipe.regions import Region, label_components


def crop(w, h, blobs, skin=200.0, dark=30.0):
    """Skin crop with a 3 px mid-gray rim and square dark blobs (cx, cy, half)."""
    img = np.full((h, w), skin)
    img[:3, :] = img[-3:, :] = img[:, :3] = img[:, -3:] = 120.0
    for cx, cy, half in blobs:
        img[cy - half:cy + half + 1, cx - half:cx + half + 1] = dark
    return img


def whole(w, h):
    return Region(1, w * h, (0, 0, w - 1, h - 1), ((w - 1) / 2, (h - 1) / 2))


def geometry(scale=1.0):
    s = scale
    return FaceGeometry(
        eye_left=(20 * s, 30 * s), eye_right=(60 * s, 30 * s), inter_eye_distance=40 * s,
        nose_tip=(40 * s, 55 * s), nose_length=25 * s, mouth_center=(40 * s, 70 * s),
        mouth_area=int(27 * s * s), face_area=int(8000 * s * s), rotation_applied=0.0,
        face_width=int(80 * s), face_height=int(100 * s),
    )


class TestLocateEyes:
    def test_two_blobs(self):
        seg = segment_face(crop(80, 100, [(20, 30, 2), (60, 32, 2)]))
        left, right = locate_eyes(seg, whole(80, 100))
        assert left == (20.0, 30.0) and right == (60.0, 32.0)

    def test_single_blob_fails(self):
        seg = segment_face(crop(80, 100, [(20, 30, 2)]))
        with pytest.raises(LocalizationError) as err:
            locate_eyes(seg, whole(80, 100))
        assert err.value.stage == "eyes"

    def test_widest_pair_wins(self):
        seg = segment_face(crop(80, 100, [(15, 30, 2), (65, 30, 2), (40, 31, 2)]))
        assert locate_eyes(seg, whole(80, 100)) == ((15.0, 30.0), (65.0, 30.0))

    def test_lower_half_ignored(self):
        seg = segment_face(crop(80, 100, [(20, 30, 2), (60, 70, 2)]))
        with pytest.raises(LocalizationError):
            locate_eyes(seg, whole(80, 100))

    def test_area_ratio_guard(self):
        # 5x5 next to 11x11: ratio 121 / 25 > 3, so the pair is rejected
        seg = segment_face(crop(80, 100, [(20, 30, 2), (60, 30, 5)]))
        with pytest.raises(LocalizationError):
            locate_eyes(seg, whole(80, 100))

    def test_dy_guard(self):
        seg = segment_face(crop(80, 100, [(20, 10, 2), (60, 45, 2)]))
        with pytest.raises(LocalizationError):
            locate_eyes(seg, whole(80, 100))
        assert locate_eyes(seg, whole(80, 100), FeatureConfig(eye_dy_fraction=0.4))

    def test_order_independent(self):
        blobs = [(15, 30, 2), (65, 30, 2), (40, 31, 2)]
        a = locate_eyes(segment_face(crop(80, 100, blobs)), whole(80, 100))
        b = locate_eyes(segment_face(crop(80, 100, blobs[::-1])), whole(80, 100))
        assert a == b


class TestOrientation:
    def test_horizontal_unchanged(self, rng):
        face = rng.uniform(0, 255, (40, 40))
        out, eyes, angle = correct_orientation(face, ((10, 20), (30, 20)))
        assert angle == 0.0
        assert np.array_equal(out, face)
        assert eyes == ((10.0, 20.0), (30.0, 20.0))

    def test_diagonal(self):
        face = np.zeros((40, 40))
        _, (l, r), angle = correct_orientation(face, ((10, 10), (20, 20)))
        assert angle == pytest.approx(math.pi / 4)
        assert abs(l[1] - r[1]) <= 0.5 and l[0] < r[0]
        assert math.dist(l, r) == pytest.approx(math.hypot(10, 10), abs=1e-6)

    def test_coincident(self):
        with pytest.raises(LocalizationError):
            correct_orientation(np.zeros((5, 5)), ((2, 2), (2, 2)))

    def test_idempotent(self):
        w, h = 100, 160
        seg = segment_face(crop(w, h, [(30, 30, 3), (60, 48, 3)]))
        box = whole(w, h)
        eyes = locate_eyes(seg, box)
        _, _, angle = correct_orientation(np.zeros((h, w)), eyes)
        mid = ((eyes[0][0] + eyes[1][0]) / 2, (eyes[0][1] + eyes[1][1]) / 2)
        again = locate_eyes(rotate_segmentation(seg, -angle, mid), box)
        _, _, second = correct_orientation(np.zeros((h, w)), again)
        assert abs(angle) > 0.5
        assert abs(second) <= 0.01


class TestNoseMouth:
    EYES = ((20.0, 30.0), (60.0, 30.0))

    def regions(self, blobs):
        m = crop(80, 100, blobs) == 30.0
        return label_components(m)[1]

    def test_fixture(self):
        regs = self.regions([(20, 30, 2), (60, 30, 2), (40, 55, 2), (40, 70, 4)])
        nose, length, mouth, area = locate_nose_mouth(regs, self.EYES, 8000)
        assert nose == (40.0, 55.0) and length == 25.0
        assert mouth == (40.0, 70.0) and area == 81

    def test_outside_strip_excluded(self):
        regs = self.regions([(65, 55, 2), (40, 70, 2), (40, 85, 2)])
        nose, _, mouth, _ = locate_nose_mouth(regs, self.EYES, 8000)
        assert nose == (40.0, 70.0) and mouth == (40.0, 85.0)

    def test_nothing_below(self):
        regs = self.regions([(20, 30, 2), (60, 30, 2)])
        with pytest.raises(LocalizationError) as err:
            locate_nose_mouth(regs, self.EYES, 8000)
        assert err.value.stage == "nose"

    def test_mouth_missing(self):
        regs = self.regions([(40, 55, 2)])
        with pytest.raises(LocalizationError) as err:
            locate_nose_mouth(regs, self.EYES, 8000)
        assert err.value.stage == "mouth"


class TestFeatureVector:
    @pytest.mark.parametrize("k, length", [(8, 70), (64, 4102)])
    def test_length(self, rng, k, length):
        face = rng.integers(0, 256, (100, 80, 3), dtype=np.uint8)
        vec = build_feature_vector(face, geometry(), dct_k=k)
        assert len(vec) == length == vec.values.size

    def test_deterministic(self, rng):
        face = rng.integers(0, 256, (100, 80, 3), dtype=np.uint8)
        a = build_feature_vector(face, geometry())
        b = build_feature_vector(face.copy(), geometry())
        assert np.array_equal(a.values, b.values)

    def test_scale_invariant_geometry(self, rng):
        face = rng.uniform(0, 255, (100, 80))
        a = build_feature_vector(face, geometry(1.0), dct_k=8)
        b = build_feature_vector(np.kron(face, np.ones((2, 2))), geometry(2.0), dct_k=8)
        assert np.allclose(a.geometry, b.geometry, atol=1e-6)
        assert np.all(a.geometry >= 0) and np.all(a.geometry <= 2)

    def test_incomplete_geometry(self):
        with pytest.raises(ValueError):
            build_feature_vector(np.zeros((10, 10)), None)

    def test_round_trip(self, rng):
        vec = build_feature_vector(rng.uniform(0, 255, (50, 40)), geometry(), dct_k=4, label="a")
        back = FeatureVector.from_dict(vec.to_dict())
        assert np.array_equal(back.values, vec.values) and back.label == "a"
        assert FaceGeometry.from_dict(geometry().to_dict()) == geometry()

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            FeatureVector(np.array([0, 0, 0, 0, 0, np.nan]), np.zeros(4))
