import math
from dataclasses import replace

import numpy as np
import pytest

from facepipe.fixtures import FaceFixtureSpec, render_fixture, render_sequence
from facepipe.pipeline import (
    ConfigError, Detection, PipelineConfig, detect_still, detect_video, gate_skin,
    motion_mask,
)
from facepipe.regions import label_components
from facepipe.skin import skin_mask


def two_faces():
    a = FaceFixtureSpec(canvas=(320, 240), center=(80.0, 120.0))
    b = replace(a, center=(230.0, 110.0), axes=(36.0, 56.0))
    img_a, _ = render_fixture(a)
    img_b, _ = render_fixture(b)
    img = img_a.copy()
    face_b = np.any(img_b != a.background, axis=2)
    img[face_b] = img_b[face_b]
    return img, (img_a, img_b)


class TestStill:
    def test_all_blue(self):
        assert detect_still(np.full((50, 60, 3), (0, 0, 255), np.uint8)) == []

    def test_single_fixture(self):
        img, truth = render_fixture(FaceFixtureSpec())
        dets = detect_still(img)
        assert len(dets) == 1
        d = dets[0]
        assert d.failure is None and d.geometry is not None
        assert math.dist(d.landmarks["eye_left"], truth.eye_left) < 2
        assert math.dist(d.landmarks["eye_right"], truth.eye_right) < 2
        assert len(d.feature) == 6 + 64 * 64

    def test_two_faces(self):
        img, singles = two_faces()
        dets = detect_still(img)
        assert len(dets) == 2
        expected = sorted(label_components(skin_mask(s))[1][0].area for s in singles)
        assert sorted(d.face_bbox.area for d in dets) == expected
        assert all(d.failure is None for d in dets)
        assert dets[0].face_bbox.bbox[1] <= dets[1].face_bbox.bbox[1]

    def test_rotated_recovery(self):
        spec = FaceFixtureSpec(rotation=0.3)
        img, truth = render_fixture(spec)
        _, flat = render_fixture(replace(spec, rotation=0.0))
        (d,) = detect_still(img)
        g = d.geometry
        assert abs(g.rotation_applied - 0.3) <= 0.05
        assert abs(g.inter_eye_distance - flat.inter_eye_distance) <= 3
        assert abs(g.nose_length - flat.nose_length) <= 3
        mid = ((g.eye_left[0] + g.eye_right[0]) / 2, (g.eye_left[1] + g.eye_right[1]) / 2)
        assert math.dist((g.mouth_center[0] - mid[0], g.mouth_center[1] - mid[1]),
                         flat.mouth_offset) <= 3

    def test_failure_recorded(self):
        # skin ellipse without any dark features: segmentation has only two levels
        spec = FaceFixtureSpec()
        img, _ = render_fixture(spec)
        img[np.all(img == spec.feature_color, axis=2)] = spec.skin_color
        (d,) = detect_still(img)
        assert d.failure["stage"] in ("segmentation", "eyes")
        assert d.geometry is None and d.feature is None

    def test_deterministic(self):
        img, _ = render_fixture(FaceFixtureSpec(rotation=-0.2, texture=5, seed=2))
        a = [d.to_dict() for d in detect_still(img)]
        b = [d.to_dict() for d in detect_still(img)]
        assert a == b

    def test_detection_round_trip(self):
        img, _ = render_fixture(FaceFixtureSpec())
        (d,) = detect_still(img, source="x.ppm")
        back = Detection.from_dict(d.to_dict())
        assert back.to_dict() == d.to_dict()


class TestVideo:
    SPEC = FaceFixtureSpec(canvas=(260, 240), center=(60.0, 120.0))

    def test_moving_face_found(self):
        frames = render_sequence(self.SPEC, 5, (10, 0))
        out = detect_video(frames)
        assert [len(f) for f in out] == [1] * 5
        assert all(f[0].failure is None for f in out)

    def test_static_suppressed(self):
        frames = render_sequence(self.SPEC, 4, (0, 0))
        out = detect_video(frames)
        assert len(out[0]) == 1
        assert all(f == [] for f in out[1:])

    def test_gating_off_matches_still(self):
        frames = render_sequence(self.SPEC, 3, (10, 0))
        cfg = PipelineConfig(motion_gating=False)
        video = detect_video(frames, cfg)
        still = [detect_still(f, cfg, source=i) for i, f in enumerate(frames)]
        assert [[d.to_dict() for d in f] for f in video] == \
            [[d.to_dict() for d in f] for f in still]

    def test_pixel_mode_gates_interior(self):
        frames = render_sequence(self.SPEC, 2, (10, 0))
        cfg = PipelineConfig()
        skin = skin_mask(frames[1])
        motion = motion_mask(frames[1], frames[0], cfg)
        pixel = gate_skin(skin, motion, "pixel")
        comp = gate_skin(skin, motion, "component")
        assert np.array_equal(comp, skin)
        assert pixel.sum() < skin.sum()

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            detect_video([np.zeros((5, 5, 3), np.uint8), np.zeros((5, 6, 3), np.uint8)])
        with pytest.raises(ValueError):
            detect_video([])


class TestConfig:
    def test_round_trip(self):
        cfg = PipelineConfig(tolerance=0.5, dct_k=8, motion_gating=True)
        assert PipelineConfig.from_dict(cfg.to_dict()) == cfg

    @pytest.mark.parametrize("bad", [
        {"tolerance": 0}, {"dct_k": 65}, {"classifier": "svm"}, {"bogus": 1},
        {"gating_mode": "frame"}, {"margin": 1.5},
    ])
    def test_invalid(self, bad):
        with pytest.raises(ConfigError):
            PipelineConfig.from_dict(bad)
