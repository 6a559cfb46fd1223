import math

import pytest

from csumnet import datagen
from csumnet.backdoor import signature_attack
from csumnet.checksum import ChecksumConfig, csum
from csumnet.datagen import LabeledPoint
from csumnet.defense import (DEFAULT_DELTA_R, DistanceHistograms, FlipReport,
                             pairwise_histograms, robustify, select_radius)
from csumnet.errors import ClassTooSmall, NoValidBin


def square_cloud(n_blue, n_orange):
    """Blue cluster near the origin, orange cluster shifted right."""
    pts = []
    side = math.ceil(math.sqrt(max(n_blue, n_orange)))
    for i in range(n_blue):
        pts.append(LabeledPoint(-3.0 + 0.1 * (i % side),
                                -1.0 + 0.1 * (i // side), 1))
    for i in range(n_orange):
        pts.append(LabeledPoint(3.0 + 0.1 * (i % side),
                                1.0 + 0.1 * (i // side), -1))
    return tuple(pts)


class TestHistograms:
    def test_pair_count_totals(self):
        # n blue and m orange points give C(n,2), C(m,2) and n*m pairs
        train = square_cloud(137, 113)
        h = pairwise_histograms(train)
        assert sum(h.h_blue) == 137 * 136 // 2 == 9316
        assert sum(h.h_orange) == 113 * 112 // 2 == 6328
        assert sum(h.h_cross) == 137 * 113 == 15481

    def test_known_two_point_geometry(self):
        train = (LabeledPoint(0.0, 0.0, 1), LabeledPoint(1.0, 0.0, 1),
                 LabeledPoint(0.0, 3.0, -1), LabeledPoint(0.0, 4.0, -1))
        h = pairwise_histograms(train, delta_r=1.0)
        # blue-blue distance 1 -> bin 1; orange-orange 1 -> bin 1
        assert h.h_blue[1] == 1 and sum(h.h_blue) == 1
        assert h.h_orange[1] == 1 and sum(h.h_orange) == 1
        # cross distances 3, sqrt(10), 4, sqrt(17)
        assert sum(h.h_cross) == 4
        assert h.h_cross[3] == 2 and h.h_cross[4] == 2

    def test_default_bin_width(self):
        assert DEFAULT_DELTA_R == math.sqrt(2.0)
        d = datagen.generate("circle", 60, seed=1)
        assert pairwise_histograms(d.train).delta_r == math.sqrt(2.0)

    def test_class_too_small(self):
        with pytest.raises(ClassTooSmall):
            pairwise_histograms((LabeledPoint(0, 0, 1), LabeledPoint(1, 1, 1),
                                 LabeledPoint(2, 2, -1)))

    def test_rejects_bad_width(self):
        d = datagen.generate("circle", 60, seed=1)
        with pytest.raises(ValueError):
            pairwise_histograms(d.train, delta_r=0.0)


class TestSelectRadius:
    def test_zero_based_first_bin(self):
        # argmax in bin 0 gives half a bin width
        h = DistanceHistograms(math.sqrt(2.0), (10, 1), (10, 1), (1, 5))
        assert select_radius(h) == pytest.approx(math.sqrt(2.0) / 2)

    def test_later_bin(self):
        h = DistanceHistograms(1.0, (1, 4, 9), (1, 4, 9), (2, 2, 3))
        # ratios 0.5, 8, 27 -> k = 2 -> R = 2.5
        assert select_radius(h) == 2.5

    def test_skips_empty_cross_bins(self):
        h = DistanceHistograms(1.0, (100, 1), (100, 1), (0, 1))
        assert select_radius(h) == 1.5

    def test_tie_to_smallest_bin(self):
        h = DistanceHistograms(1.0, (2, 2), (2, 2), (1, 1))
        assert select_radius(h) == 0.5

    def test_no_valid_bin(self):
        h = DistanceHistograms(1.0, (3, 3), (3, 3), (0, 0))
        with pytest.raises(NoValidBin):
            select_radius(h)

    def test_scales_with_bin_width(self):
        train = square_cloud(20, 20)
        for dr in (0.5, math.sqrt(2.0), 2.0):
            h = pairwise_histograms(train, delta_r=dr)
            r = select_radius(h)
            assert r / dr - 0.5 == int(r / dr - 0.5)


class TestRobustify:
    def test_unanimous_neighborhood_flips_lie(self):
        train = square_cloud(10, 10)
        lied = LabeledPoint(-3.0, -1.0, -1)  # sits inside the blue cluster
        fixed, report = robustify(train, (lied,), 1.5)
        assert fixed[0].label == 1
        assert report.flipped == (0,)
        assert report.counts[0][1] > report.counts[0][0]

    def test_majority_must_be_strict(self):
        train = (LabeledPoint(0.0, 1.0, 1), LabeledPoint(0.0, -1.0, -1))
        tied = LabeledPoint(0.0, 0.0, 1)
        fixed, report = robustify(train, (tied,), 2.0)
        assert fixed[0].label == 1 and report.flipped == ()

    def test_empty_neighborhood_unchanged(self):
        train = square_cloud(5, 5)
        far = LabeledPoint(0.0, 5.9, -1)
        fixed, report = robustify(train, (far,), 0.5)
        assert fixed[0] == far
        assert report.counts[0] == (0, 0)

    def test_closed_ball_boundary_included(self):
        train = (LabeledPoint(0.0, 0.0, 1), LabeledPoint(0.0, 0.1, 1))
        p = LabeledPoint(1.0, 0.0, -1)
        fixed, _ = robustify(train, (p,), 1.0)  # distance exactly 1.0
        assert fixed[0].label == 1

    def test_idempotent(self):
        d = datagen.generate("two_gaussians", 120, seed=3)
        r = select_radius(pairwise_histograms(d.train))
        once, _ = robustify(d.train, d.test, r)
        twice, report = robustify(d.train, once, r)
        assert twice == once and report.flipped == ()

    def test_rejects_bad_radius(self):
        d = datagen.generate("circle", 40, seed=1)
        with pytest.raises(ValueError):
            robustify(d.train, d.test, 0.0)


class TestAttackRecovery:
    def test_restores_signature_flipped_labels(self):
        d = datagen.generate("two_gaussians", 200, seed=11)
        # pick the key that hits the most test points
        counts = [0] * 10
        for p in d.test:
            counts[csum(p.x, ChecksumConfig(m=10))] += 1
        cfg = ChecksumConfig(m=10, sk=max(range(10), key=counts.__getitem__))
        attacked, _ = signature_attack(d, cfg)
        lied = [i for i, (a, b) in enumerate(zip(d.test, attacked.test))
                if a.label != b.label]
        assert len(lied) >= 5

        r = select_radius(pairwise_histograms(attacked.train))
        fixed, report = robustify(attacked.train, attacked.test, r)
        assert set(report.flipped) == set(lied)
        assert fixed == d.test

    def test_overlapping_classes_reported_not_asserted(self):
        # heavy noise: the defense may flip honest labels; the report is the
        # contract, not a guarantee of recovery
        d = datagen.generate("spiral", 120, noise=0.6, seed=4)
        r = select_radius(pairwise_histograms(d.train))
        fixed, report = robustify(d.train, d.test, r)
        assert isinstance(report, FlipReport)
        assert len(fixed) == len(d.test)
        assert all(0 <= i < len(d.test) for i in report.flipped)
