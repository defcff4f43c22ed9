"""Tests for evaluation module."""

import math

import numpy as np
import pytest

from temporal_spotting.data import GroundTruthAction
from temporal_spotting.errors import LabelError
from temporal_spotting.evaluation import (
    DEFAULT_DELTAS,
    average_map,
    average_precision,
    format_report,
    match_spots,
    report_to_json,
)
from temporal_spotting.spotting import Spot

CLASSES = ["goal", "card", "corner"]


def _gt(class_index, seconds, visible=True):
    return GroundTruthAction(class_index, int(seconds * 1000), visible)


def _spot(class_index, seconds, confidence):
    return Spot(class_index, int(seconds * 1000), confidence)


def _truth():
    return {
        "a": [_gt(0, 100), _gt(1, 300), _gt(2, 500)],
        "b": [_gt(0, 200), _gt(2, 700)],
    }


def _best_flags(pred_ms, gt_ms, tolerance_ms):
    """Every one-to-one matching enumerated; most TPs, then TPs earliest in the given order."""
    achievable = set()

    def assign(i, used, flags):
        if i == len(pred_ms):
            achievable.add(tuple(flags))
            return
        assign(i + 1, used, [*flags, False])
        for g, t in enumerate(gt_ms):
            if g not in used and abs(pred_ms[i] - t) <= tolerance_ms:
                assign(i + 1, used | {g}, [*flags, True])

    assign(0, frozenset(), [])
    return max(achievable, key=lambda flags: (sum(flags), flags))


class TestAveragePrecision:
    """Tests for average_precision function."""

    def test_hand_computed(self):
        """Test TP, FP, TP with two ground truths gives 5/6."""
        assert math.isclose(average_precision([True, False, True], 2), 5 / 6)

    def test_all_true_positives(self):
        """Test a perfect ranking."""
        assert average_precision([True, True], 2) == 1.0

    def test_no_ground_truth_no_predictions(self):
        """Test the empty class convention."""
        assert average_precision([], 0) == 1.0

    def test_no_ground_truth_with_predictions(self):
        """Test false positives on a class without ground truth."""
        assert average_precision([False], 0) == 0.0

    def test_no_predictions(self):
        """Test missed ground truth."""
        assert average_precision([], 3) == 0.0


class TestMatchSpots:
    """Tests for match_spots function."""

    def test_exact_hit(self):
        """Test a prediction on a ground truth is a TP at any tolerance."""
        result = match_spots([_spot(0, 10, 0.5)], [_gt(0, 10)], 0.001)
        assert result.tp.tolist() == [True]

    def test_tolerance_is_inclusive(self):
        """Test |Δt| equal to the tolerance still matches."""
        result = match_spots([_spot(0, 15, 0.5)], [_gt(0, 10)], 5.0)
        assert result.tp.tolist() == [True]

    def test_each_ground_truth_matched_once(self):
        """Test a second prediction on a claimed ground truth is a FP."""
        result = match_spots([_spot(0, 10, 0.9), _spot(0, 11, 0.8)], [_gt(0, 10)], 5.0)
        assert result.tp.tolist() == [True, False]

    def test_confidence_order(self):
        """Test the more confident prediction claims the ground truth."""
        result = match_spots([_spot(0, 10, 0.2), _spot(0, 12, 0.9)], [_gt(0, 10)], 5.0)
        assert result.confidences.tolist() == [0.9, 0.2]
        assert result.tp.tolist() == [True, False]

    def test_equidistant_ground_truth_picks_earliest(self):
        """Test a prediction halfway between two ground truths."""
        result = match_spots([_spot(0, 20, 0.5)], [_gt(0, 30), _gt(0, 10)], 10.0)
        assert result.matched_gt.tolist() == [1]

    def test_reroutes_earlier_match_to_cover_more(self):
        """Test a confident spot gives up the nearer ground truth so a second spot can match."""
        result = match_spots([_spot(0, 4.5, 0.9), _spot(0, 9, 0.8)], [_gt(0, 0), _gt(0, 8)], 5.0)
        assert result.tp.tolist() == [True, True]
        assert result.matched_gt.tolist() == [0, 1]
        assert result.gt_matched.tolist() == [True, True]

    def test_agrees_with_exhaustive_matching(self):
        """Test TP flags against every one-to-one matching on dense random instances."""
        rng = np.random.default_rng(0)
        for _ in range(300):
            n_gt = int(rng.integers(0, 6))
            n_pred = int(rng.integers(0, 6))
            gt_s = rng.uniform(0, 30, n_gt)
            predictions = [_spot(0, float(t), float(c)) for t, c in zip(rng.uniform(0, 30, n_pred), rng.random(n_pred))]
            truth = [_gt(0, float(t)) for t in gt_s]
            result = match_spots(predictions, truth, 5.0)
            ordered = sorted(predictions, key=lambda s: (-s.confidence, s.position_ms))
            expected = _best_flags([p.position_ms for p in ordered], [g.position_ms for g in truth], 5_000)
            assert tuple(result.tp.tolist()) == expected
            assert int(result.gt_matched.sum()) == sum(expected)


class TestAverageMap:
    """Tests for average_map function."""

    def test_perfect_predictions(self):
        """Test predictions on every ground truth score 1."""
        truth = _truth()
        predictions = {v: [Spot(a.class_index, a.position_ms, 1.0) for a in acts] for v, acts in truth.items()}
        report = average_map(predictions, truth, CLASSES)
        assert report.average_map == 1.0
        np.testing.assert_array_equal(report.map_per_delta, np.ones(12))

    def test_empty_predictions(self):
        """Test no predictions at all score 0."""
        assert average_map({}, _truth(), CLASSES).average_map == 0.0

    def test_class_shuffled_predictions(self):
        """Test predictions with the right times but the wrong classes score 0."""
        truth = _truth()
        predictions = {
            v: [Spot((a.class_index + 1) % 3, a.position_ms, 1.0) for a in acts] for v, acts in truth.items()
        }
        assert average_map(predictions, truth, CLASSES).average_map == 0.0

    def test_hand_computed_sweep(self):
        """Test offsets straddling the 5 s and 10 s tolerances."""
        truth = {"v": [_gt(0, 100), _gt(0, 300), _gt(1, 200)]}
        predictions = {
            "v": [_spot(0, 103, 0.9), _spot(0, 307, 0.8), _spot(0, 500, 0.7), _spot(1, 212, 0.6)]
        }
        report = average_map(predictions, truth, ["goal", "card"])
        np.testing.assert_allclose(report.map_per_delta[:3], [0.25, 0.5, 1.0])
        assert math.isclose(report.average_map, 10.75 / 12)

    def test_monotone_in_tolerance(self):
        """Test mAP never drops as the tolerance grows on random instances."""
        rng = np.random.default_rng(1)
        for _ in range(50):
            truth = {"v": [_gt(int(rng.integers(2)), 100 + 200 * k) for k in range(4)]}
            n = int(rng.integers(1, 12))
            predictions = {
                "v": [
                    _spot(int(rng.integers(2)), 100 + 200 * int(rng.integers(4)) + rng.uniform(-70, 70), rng.random())
                    for _ in range(n)
                ]
            }
            report = average_map(predictions, truth, ["goal", "card"], breakdown=False)
            assert np.all(np.diff(report.map_per_delta) >= -1e-12)

    def test_confidence_rescaling_invariant(self):
        """Test that only the confidence order matters."""
        truth = {"v": [_gt(0, 100), _gt(0, 300)]}
        spots = [_spot(0, 104, 0.9), _spot(0, 250, 0.6), _spot(0, 301, 0.3)]
        scaled = [Spot(s.class_index, s.position_ms, s.confidence / 3) for s in spots]
        a = average_map({"v": spots}, truth, ["goal"])
        b = average_map({"v": scaled}, truth, ["goal"])
        assert a.average_map == b.average_map

    def test_visible_and_unshown_breakdown(self):
        """Test predictions matched to the other subset are ignored, not counted as FP."""
        truth = {"v": [_gt(0, 100, visible=True), _gt(0, 300, visible=False)]}
        predictions = {"v": [_spot(0, 600, 0.95), _spot(0, 100, 0.9), _spot(0, 300, 0.8)]}
        report = average_map(predictions, truth, ["goal"], deltas=(5.0,))
        assert math.isclose(report.average_map, 2 / 3)
        assert math.isclose(report.visible.average_map, 0.5)
        assert math.isclose(report.unshown.average_map, 0.5)
        assert report.visible.gt_counts == {"goal": 1}

    def test_subset_without_ground_truth(self):
        """Test an all-visible dataset has no unshown report."""
        report = average_map({}, _truth(), CLASSES)
        assert report.visible is not None
        assert report.unshown is None

    def test_subset_skips_classes_without_ground_truth(self):
        """Test a class with only visible ground truth is excluded from the unshown mean."""
        truth = {"v": [_gt(0, 100, visible=False), _gt(1, 300)]}
        predictions = {"v": [_spot(0, 100, 0.9)]}
        report = average_map(predictions, truth, ["goal", "card"])
        assert report.unshown.average_map == 1.0
        assert np.isnan(report.unshown.ap[1]).all()
        assert report.average_map == 0.5

    def test_unknown_class_index(self):
        """Test a prediction outside the vocabulary."""
        with pytest.raises(LabelError):
            average_map({"a": [Spot(7, 0, 0.5)]}, _truth(), CLASSES)

    def test_bad_tolerances(self):
        """Test an empty tolerance list."""
        with pytest.raises(ValueError):
            average_map({}, _truth(), CLASSES, deltas=())

    def test_default_sweep(self):
        """Test the default tolerances are 5..60 s in steps of 5."""
        assert DEFAULT_DELTAS == tuple(float(d) for d in range(5, 61, 5))


class TestReportOutput:
    """Tests for format_report and report_to_json."""

    def test_text_table(self):
        """Test one row per class and a closing Average-mAP row."""
        truth = _truth()
        predictions = {v: [Spot(a.class_index, a.position_ms, 1.0) for a in acts] for v, acts in truth.items()}
        lines = format_report(average_map(predictions, truth, CLASSES)).splitlines()
        assert lines[-1].startswith("Average-mAP")
        assert "100.00" in lines[-1]
        assert any(line.startswith("corner") for line in lines)

    def test_json_tables(self):
        """Test per-class per-tolerance tables and null subsets."""
        payload = report_to_json(average_map({}, _truth(), CLASSES))
        assert payload["average_map"] == 0.0
        assert len(payload["per_class"]["goal"]["ap_per_delta"]) == 12
        assert payload["per_class"]["goal"]["gt_count"] == 2
        assert payload["unshown"] is None
