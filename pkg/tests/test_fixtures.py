import json
import math
from dataclasses import replace

import numpy as np
import pytest

from facepipe.fixtures import (
    FaceFixtureSpec, FixtureError, fixture_corpus, load_fixture_spec, render_fixture,
    render_sequence, validate_spec,
)
from facepipe.imaging import difference_image, to_gray
from facepipe.skin import skin_mask


class TestRender:
    def test_deterministic(self):
        spec = FaceFixtureSpec(texture=6, seed=4)
        assert np.array_equal(render_fixture(spec)[0], render_fixture(spec)[0])

    def test_colors_versus_skin_rule(self):
        spec = FaceFixtureSpec()
        img, _ = render_fixture(spec)
        mask = skin_mask(img)
        is_skin_color = np.all(img == spec.skin_color, axis=2)
        assert np.array_equal(mask, is_skin_color)
        assert not mask[np.all(img == spec.background, axis=2)].any()

    def test_truth_geometry(self):
        _, t = render_fixture(FaceFixtureSpec())
        # eyes at (+-0.4 * 40, -0.2 * 60) from the center (100, 120)
        assert t.eye_left == pytest.approx((84.0, 108.0))
        assert t.eye_right == pytest.approx((116.0, 108.0))
        assert t.inter_eye_distance == pytest.approx(32.0)
        assert t.nose_length == pytest.approx(0.32 * 60)

    def test_rotated_truth(self):
        _, t = render_fixture(FaceFixtureSpec(rotation=0.3))
        dx, dy = t.eye_right[0] - t.eye_left[0], t.eye_right[1] - t.eye_left[1]
        assert math.atan2(dy, dx) == pytest.approx(0.3)
        assert math.hypot(dx, dy) == pytest.approx(t.inter_eye_distance)

    @pytest.mark.parametrize("bad", [
        dict(axes=(60.0, 40.0)),
        dict(skin_color=(0, 0, 255)),
        dict(background=(224, 172, 140)),
        dict(center=(20.0, 120.0)),
        dict(eye_offset=(0.9, -0.2)),
    ])
    def test_invalid_specs(self, bad):
        with pytest.raises(FixtureError):
            validate_spec(replace(FaceFixtureSpec(), **bad))

    def test_spec_file(self, tmp_path):
        spec = FaceFixtureSpec(rotation=0.1, seed=3)
        p = tmp_path / "s.json"
        p.write_text(json.dumps(spec.to_dict()))
        assert load_fixture_spec(p) == spec

    def test_corpus_valid(self):
        specs = fixture_corpus(20, seed=1)
        assert specs == fixture_corpus(20, seed=1)
        for s in specs:
            validate_spec(s)


class TestSequence:
    def test_still(self):
        frames = render_sequence(FaceFixtureSpec(), 3, (0, 0))
        assert all(np.array_equal(f, frames[0]) for f in frames)

    def test_moving_difference_support(self):
        spec = FaceFixtureSpec(canvas=(260, 240), center=(80.0, 120.0))
        frames = render_sequence(spec, 5, (10, 0))
        for t in range(1, 5):
            diff = difference_image(to_gray(frames[t]), to_gray(frames[t - 1]))
            ys, xs = np.nonzero(diff)
            assert diff.any()
            # support stays within the union of the two ellipse boxes
            assert xs.min() >= 80 + 10 * (t - 1) - 40 - 1
            assert xs.max() <= 80 + 10 * t + 40 + 1
            assert ys.min() >= 120 - 60 - 1 and ys.max() <= 120 + 60 + 1

    def test_leaves_canvas(self):
        with pytest.raises(FixtureError):
            render_sequence(FaceFixtureSpec(), 10, (10, 0))
