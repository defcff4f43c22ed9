"""Average-mAP: per-class AP within a tolerance, averaged over classes and tolerances."""

import logging
from dataclasses import dataclass, field

import numpy as np

from .data.labels import GroundTruthAction
from .errors import LabelError
from .spotting import Spot

logger = logging.getLogger(__name__)

DEFAULT_DELTAS: tuple[float, ...] = tuple(float(d) for d in range(5, 65, 5))


@dataclass
class MatchResult:
    """
    Outcome of matching one class of one video.

    ``tp`` and ``confidences`` follow the confidence-descending prediction
    order; ``matched_gt`` holds, per prediction, the index of the claimed
    ground truth or -1.
    """

    tp: np.ndarray
    confidences: np.ndarray
    matched_gt: np.ndarray
    gt_matched: np.ndarray


@dataclass
class EvalReport:
    """AP per (class, δ), mAP per δ and their mean; optional subset reports."""

    class_names: list[str]
    deltas: tuple[float, ...]
    ap: np.ndarray  # classes × deltas, NaN where a class is excluded
    map_per_delta: np.ndarray
    average_map: float
    visible: "EvalReport | None" = None
    unshown: "EvalReport | None" = None
    gt_counts: dict[str, int] = field(default_factory=dict)

    @property
    def class_average_ap(self) -> np.ndarray:
        """Per-class AP averaged over the tolerance sweep."""
        return self.ap.mean(axis=1)


def _confidence_order(predictions: list[Spot]) -> list[Spot]:
    return sorted(predictions, key=lambda s: (-s.confidence, s.position_ms))


def match_spots(
    predictions: list[Spot], ground_truth: list[GroundTruthAction], delta_s: float
) -> MatchResult:
    """
    One-to-one matching within a tolerance, maximal and confidence-first.

    Predictions are visited by descending confidence (earlier position first on
    ties). Each one becomes a TP if some matching within ``delta_s`` seconds
    covers it together with every TP accepted before it; finding one may move
    earlier TPs to other ground truth along an augmenting path. The TP set is
    therefore a maximum matching, and among maximum matchings the one whose
    TPs come first in confidence order. Candidates are tried nearest first,
    the earlier ground truth on equal distance. Callers pass a single class of
    a single video.

    Returns:
        Match flags for predictions and ground truth
    """
    ordered = _confidence_order(predictions)
    gt_ms = np.array([g.position_ms for g in ground_truth], dtype=np.float64)
    tolerance_ms = delta_s * 1000.0
    candidates = []
    for spot in ordered:
        gap = np.abs(gt_ms - spot.position_ms)
        near = np.flatnonzero(gap <= tolerance_ms)
        candidates.append(sorted(near.tolist(), key=lambda j: (gap[j], gt_ms[j], j)))
    owner = np.full(len(ground_truth), -1, dtype=np.int64)

    def augment(i: int, visited: set[int]) -> bool:
        for j in candidates[i]:
            if j in visited:
                continue
            visited.add(j)
            if owner[j] < 0 or augment(int(owner[j]), visited):
                owner[j] = i
                return True
        return False

    for i in range(len(ordered)):
        if candidates[i]:
            augment(i, set())
    matched = np.full(len(ordered), -1, dtype=np.int64)
    claimed = owner >= 0
    matched[owner[claimed]] = np.flatnonzero(claimed)
    confidences = np.array([s.confidence for s in ordered], dtype=np.float64)
    return MatchResult(matched >= 0, confidences, matched, claimed)


def average_precision(flags, total_gt: int) -> float:
    """
    All-point interpolated area under the precision-recall curve.

    Args:
        flags: TP (True) / FP (False) per prediction, by descending confidence
        total_gt: Number of ground-truth actions

    Returns:
        AP in [0, 1]; 1 when there is neither ground truth nor prediction,
        0 when there is no ground truth but some prediction
    """
    flags = np.asarray(flags, dtype=bool)
    if total_gt <= 0:
        return 1.0 if flags.size == 0 else 0.0
    if flags.size == 0:
        return 0.0
    tp = np.cumsum(flags)
    precision = tp / np.arange(1, flags.size + 1)
    recall = tp / total_gt
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    steps = np.diff(np.concatenate([[0.0], recall]))
    return float(np.sum(steps * envelope))


def _group(
    predictions: dict[str, list[Spot]],
    ground_truth: dict[str, list[GroundTruthAction]],
    class_count: int,
) -> tuple[dict, dict]:
    pred_by = {}
    gt_by = {}
    for video_id in sorted(set(predictions) | set(ground_truth)):
        spots = predictions.get(video_id, [])
        for spot in spots:
            if not 0 <= spot.class_index < class_count:
                raise LabelError(f"prediction in video {video_id} has unknown class index {spot.class_index}")
        if video_id not in ground_truth:
            logger.warning("predictions for video=%s have no ground truth; all count as false positives", video_id)
        actions = ground_truth.get(video_id, [])
        for c in range(class_count):
            pred_by[video_id, c] = [s for s in spots if s.class_index == c]
            gt_by[video_id, c] = [a for a in actions if a.class_index == c]
    return pred_by, gt_by


def _class_ap(
    pred_by: dict,
    gt_by: dict,
    video_ids: list[str],
    class_index: int,
    delta_s: float,
    subset: bool | None,
) -> float | None:
    """
    AP of one class at one tolerance over all videos.

    With ``subset`` set, predictions are matched against the full ground truth
    first; then only ground truth whose ``visible`` flag equals ``subset``
    counts, and predictions matched to the other subset are ignored rather
    than counted as false positives. Returns None when the subset has no
    ground truth for this class.
    """
    confidences = []
    flags = []
    total = 0
    for video_id in video_ids:
        gt = gt_by[video_id, class_index]
        result = match_spots(pred_by[video_id, class_index], gt, delta_s)
        if subset is None:
            total += len(gt)
            confidences.append(result.confidences)
            flags.append(result.tp)
            continue
        in_subset = np.array([a.visible == subset for a in gt], dtype=bool)
        total += int(in_subset.sum())
        keep = ~result.tp | in_subset[np.maximum(result.matched_gt, 0)] if len(gt) else ~result.tp
        confidences.append(result.confidences[keep])
        flags.append(result.tp[keep])
    if subset is not None and total == 0:
        return None
    if not confidences:
        return average_precision([], total)
    conf = np.concatenate(confidences)
    tp = np.concatenate(flags)
    order = np.argsort(-conf, kind="stable")
    return average_precision(tp[order], total)


def _report(
    pred_by: dict,
    gt_by: dict,
    video_ids: list[str],
    class_names: list[str],
    deltas: tuple[float, ...],
    subset: bool | None,
) -> EvalReport | None:
    ap = np.full((len(class_names), len(deltas)), np.nan)
    for c in range(len(class_names)):
        for j, delta in enumerate(deltas):
            value = _class_ap(pred_by, gt_by, video_ids, c, delta, subset)
            if value is not None:
                ap[c, j] = value
    included = ~np.isnan(ap[:, 0])
    if not included.any():
        return None
    map_per_delta = ap[included].mean(axis=0)
    counts = {
        name: sum(
            1
            for video_id in video_ids
            for a in gt_by[video_id, c]
            if subset is None or a.visible == subset
        )
        for c, name in enumerate(class_names)
    }
    return EvalReport(
        class_names=list(class_names),
        deltas=tuple(deltas),
        ap=ap,
        map_per_delta=map_per_delta,
        average_map=float(map_per_delta.mean()),
        gt_counts=counts,
    )


def average_map(
    predictions: dict[str, list[Spot]],
    ground_truth: dict[str, list[GroundTruthAction]],
    class_names: list[str],
    deltas: tuple[float, ...] = DEFAULT_DELTAS,
    breakdown: bool = True,
) -> EvalReport:
    """
    Average-mAP over a tolerance sweep.

    AP per (class, δ), then the unweighted class mean per δ, then the mean over δ.
    Every class counts in the overall report. The visible and unshown reports
    only average classes that have ground truth in that subset.

    Args:
        predictions: Spots per video id
        ground_truth: Annotated actions per video id
        class_names: Action vocabulary, in class-index order
        deltas: Tolerances in seconds (5..60 step 5 by default)
        breakdown: Also compute visible-only and unshown-only reports

    Raises:
        LabelError: If a prediction has a class index outside the vocabulary
        ValueError: If ``deltas`` is empty or not positive
    """
    if not deltas or min(deltas) <= 0:
        raise ValueError(f"tolerances must be a nonempty list of positive seconds, got {deltas}")
    pred_by, gt_by = _group(predictions, ground_truth, len(class_names))
    video_ids = sorted(set(predictions) | set(ground_truth))
    report = _report(pred_by, gt_by, video_ids, class_names, deltas, None)
    assert report is not None
    if breakdown:
        report.visible = _report(pred_by, gt_by, video_ids, class_names, deltas, True)
        report.unshown = _report(pred_by, gt_by, video_ids, class_names, deltas, False)
    logger.info(
        "average_map=%.4f videos=%d classes=%d", report.average_map, len(video_ids), len(class_names)
    )
    return report


def _fmt(value: float) -> str:
    return "   -  " if value is None or np.isnan(value) else f"{100.0 * value:6.2f}"


def format_report(report: EvalReport) -> str:
    """Plain-text table: one row per class, Avg-mAP columns overall / visible / unshown."""
    subsets = [("overall", report), ("visible", report.visible), ("unshown", report.unshown)]
    width = max(len("Average-mAP"), *(len(n) for n in report.class_names))
    header = f"{'class':<{width}}  " + "  ".join(f"{name:>7}" for name, _ in subsets)
    lines = [header, "-" * len(header)]
    for c, name in enumerate(report.class_names):
        cells = [
            _fmt(sub.class_average_ap[c]) if sub is not None else _fmt(None) for _, sub in subsets
        ]
        lines.append(f"{name:<{width}}  " + "  ".join(f"{cell:>7}" for cell in cells))
    lines.append("-" * len(header))
    totals = [_fmt(sub.average_map) if sub is not None else _fmt(None) for _, sub in subsets]
    lines.append(f"{'Average-mAP':<{width}}  " + "  ".join(f"{cell:>7}" for cell in totals))
    return "\n".join(lines)


def _nan_to_none(values) -> list[float | None]:
    return [None if np.isnan(v) else float(v) for v in values]


def report_to_json(report: EvalReport | None) -> dict | None:
    """JSON-ready dict with per-class per-δ tables; None values mark excluded classes."""
    if report is None:
        return None
    return {
        "average_map": report.average_map,
        "deltas": list(report.deltas),
        "map_per_delta": [float(v) for v in report.map_per_delta],
        "per_class": {
            name: {
                "ap_per_delta": _nan_to_none(report.ap[c]),
                "average_ap": None if np.isnan(report.class_average_ap[c]) else float(report.class_average_ap[c]),
                "gt_count": report.gt_counts.get(name, 0),
            }
            for c, name in enumerate(report.class_names)
        },
        "visible": report_to_json(report.visible),
        "unshown": report_to_json(report.unshown),
    }
