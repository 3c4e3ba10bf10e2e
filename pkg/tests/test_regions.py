import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from facepipe.regions import GOLDEN_RATIO, FaceCandidateRule, Region, face_candidates, label_components
from oracles import flood_fill_partition, labels_partition

masks = arrays(np.bool_, st.tuples(st.integers(1, 12), st.integers(1, 12)))


def region(w, h, area=None):
    return Region(1, area if area is not None else w * h, (0, 0, w - 1, h - 1),
                  ((w - 1) / 2, (h - 1) / 2))


class TestLabeling:
    DIAG = np.eye(3, dtype=bool)

    def test_diagonal_8(self):
        labels, regions = label_components(self.DIAG, 8)
        assert len(regions) == 1 and regions[0].area == 3
        assert labels.max() == 1

    def test_diagonal_4(self):
        _, regions = label_components(self.DIAG, 4)
        assert [r.area for r in regions] == [1, 1, 1]

    def test_empty(self):
        labels, regions = label_components(np.zeros((4, 4), bool))
        assert regions == [] and not labels.any()

    def test_region_stats(self):
        m = np.zeros((6, 7), bool)
        m[1:3, 2:6] = True  # 2x4 block
        m[5, 0] = True
        labels, regions = label_components(m)
        big, small = regions
        assert big.label == 1 and big.area == 8
        assert big.bbox == (2, 1, 5, 2)
        assert big.centroid == (3.5, 1.5)
        assert small.area == 1 and small.bbox == (0, 5, 0, 5)
        assert (labels == 1).sum() == 8 and labels[5, 0] == 2

    def test_sort_ties(self):
        m = np.zeros((5, 9), bool)
        m[3, 1] = m[0, 6] = m[0, 2] = True
        _, regions = label_components(m)
        # equal areas: smaller min_y first, then smaller min_x
        assert [r.bbox[:2] for r in regions] == [(2, 0), (6, 0), (1, 3)]

    def test_u_shape_merges(self):
        m = np.array([[1, 0, 1],
                      [1, 0, 1],
                      [1, 1, 1]], bool)
        _, regions = label_components(m, 4)
        assert len(regions) == 1 and regions[0].area == 7

    def test_bad_connectivity(self):
        with pytest.raises(ValueError):
            label_components(np.zeros((2, 2), bool), 6)

    @pytest.mark.parametrize("conn", [4, 8])
    def test_flood_fill_oracle(self, rng, conn):
        for _ in range(40):
            m = rng.random((32, 32)) < rng.uniform(0.2, 0.7)
            labels, regions = label_components(m, conn)
            assert labels_partition(labels) == flood_fill_partition(m, conn)
            assert sorted(np.unique(labels[labels > 0])) == list(range(1, len(regions) + 1))

    @settings(max_examples=60, deadline=None)
    @given(m=masks)
    def test_invariants(self, m):
        labels4, r4 = label_components(m, 4)
        labels8, r8 = label_components(m, 8)
        assert sum(r.area for r in r8) == m.sum()
        assert len(r8) <= len(r4)
        assert np.array_equal(labels8 > 0, m)
        areas = [r.area for r in r8]
        assert areas == sorted(areas, reverse=True)
        for r in r8:
            x0, y0, x1, y1 = r.bbox
            assert x0 <= r.centroid[0] <= x1 and y0 <= r.centroid[1] <= y1
            assert r.area <= r.width * r.height

    def test_translation(self, rng):
        m = rng.random((10, 10)) < 0.4
        big = np.zeros((20, 20), bool)
        big[5:15, 3:13] = m
        _, a = label_components(m)
        _, b = label_components(big)
        assert [r.area for r in a] == [r.area for r in b]
        for ra, rb in zip(a, b):
            assert rb.bbox == (ra.bbox[0] + 3, ra.bbox[1] + 5, ra.bbox[2] + 3, ra.bbox[3] + 5)


class TestFaceCandidates:
    def test_golden_box_kept(self):
        r = region(50, 81, area=2500)
        assert face_candidates([r]) == [r]
        assert 81 / 50 == pytest.approx(1.62)

    def test_wide_box_rejected(self):
        assert face_candidates([region(100, 50)]) == []

    def test_area_guard(self):
        assert face_candidates([region(10, 16, area=100)]) == []
        assert face_candidates([region(10, 16, area=100)], FaceCandidateRule(min_area=50))

    def test_band_edges(self):
        rule = FaceCandidateRule()
        lo, hi = GOLDEN_RATIO - 0.65, GOLDEN_RATIO + 0.65
        assert lo == pytest.approx(0.968, abs=1e-3) and hi == pytest.approx(2.268, abs=1e-3)
        assert rule.accepts(region(100, 97, area=5000))
        assert not rule.accepts(region(100, 96, area=5000))
        assert rule.accepts(region(100, 226, area=5000))
        assert not rule.accepts(region(100, 227, area=5000))

    def test_subsequence(self, rng):
        regs = [region(int(w), int(h)) for w, h in rng.integers(5, 60, (30, 2))]
        kept = face_candidates(regs, FaceCandidateRule(min_area=1))
        it = iter(regs)
        assert all(any(k is r for r in it) for k in kept)

    def test_rule_validation(self):
        with pytest.raises(ValueError):
            FaceCandidateRule(tolerance=0)
        with pytest.raises(ValueError):
            FaceCandidateRule(min_area=0)
