"""Dense sliding-window inference and temporal non-maximum suppression."""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .data.features import FeatureSequence
from .errors import DataFormatError, LabelError, ShapeError
from .model import SpottingModel

logger = logging.getLogger(__name__)

DEFAULT_BATCH = 256


@dataclass
class ActionnessCurve:
    """Per-class scores at every frame position (background unit removed)."""

    scores: np.ndarray  # C_actions × N_positions
    positions_ms: np.ndarray
    stride: int = 1

    def __post_init__(self) -> None:
        if self.scores.ndim != 2 or self.scores.shape[1] != self.positions_ms.shape[0]:
            raise ShapeError(
                f"scores {self.scores.shape} do not match {self.positions_ms.shape[0]} positions"
            )
        if np.any(np.diff(self.positions_ms) <= 0):
            raise ShapeError("positions must be strictly increasing")


@dataclass(frozen=True)
class Spot:
    """A single-timestamp prediction."""

    class_index: int
    position_ms: int
    confidence: float


def dense_actionness(
    model: SpottingModel,
    seq: FeatureSequence,
    batch_size: int = DEFAULT_BATCH,
    threads: int = 1,
) -> ActionnessCurve:
    """
    Slide the model window over every frame with stride 1.

    The window is centered so that the scored frame is the first frame of the
    future half; frames beyond either end of the video are zeros.

    Args:
        model: Trained model; its window sets T
        seq: Video features
        batch_size: Windows scored per forward call
        threads: Worker threads; results are gathered by position, not completion

    Returns:
        Curve with one column per frame and the background unit dropped

    Raises:
        ShapeError: If the video has fewer than 2 frames or the wrong feature dim
    """
    if seq.n_frames < 2:
        raise ShapeError(f"video {seq.video_id} has {seq.n_frames} frame(s); need at least 2")
    window = model.config.window
    if abs(window.frame_rate - seq.frame_rate) > 1e-9:
        raise ShapeError(
            f"video {seq.video_id} is at {seq.frame_rate} fps, model window expects {window.frame_rate}"
        )
    frames = window.frames
    center = window.center_index(frames)
    features = seq.as_float64()
    padded = np.concatenate(
        [
            np.zeros((center, seq.dim)),
            features,
            np.zeros((frames - center - 1, seq.dim)),
        ]
    )
    windows = sliding_window_view(padded, (frames, seq.dim))[:, 0]  # N × frames × D

    starts = range(0, seq.n_frames, batch_size)

    def score(start: int) -> np.ndarray:
        return model.predict(windows[start : start + batch_size])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(score, starts))
    else:
        parts = [score(s) for s in starts]
    scores = np.concatenate(parts, axis=0)

    n_actions = model.config.num_classes - 1
    positions = np.array([seq.frame_ms(i) for i in range(seq.n_frames)], dtype=np.int64)
    logger.debug("dense actionness video=%s positions=%d", seq.video_id, seq.n_frames)
    return ActionnessCurve(scores[:, :n_actions].T.copy(), positions)


def nms(curve: ActionnessCurve, nms_window_s: float, threshold: float | None = None) -> list[Spot]:
    """
    Per-class greedy suppression in a centered window of ``nms_window_s``.

    Repeatedly emit the highest remaining score (earliest position on ties)
    and suppress every position within nms_window_s/2 of it, until all scores
    are used or fall below ``threshold``.

    Returns:
        Spots sorted by (position, class)

    Raises:
        ValueError: If ``nms_window_s`` is not positive
    """
    if nms_window_s <= 0:
        raise ValueError(f"NMS window must be positive, got {nms_window_s}")
    radius_ms = nms_window_s * 1000.0 / 2.0
    positions = curve.positions_ms.astype(np.float64)
    spots = []
    for class_index, row in enumerate(curve.scores):
        remaining = row.astype(np.float64).copy()
        while True:
            best = int(np.argmax(remaining))
            confidence = remaining[best]
            if confidence == -np.inf or (threshold is not None and confidence < threshold):
                break
            spots.append(Spot(class_index, int(curve.positions_ms[best]), float(confidence)))
            remaining[np.abs(positions - positions[best]) <= radius_ms] = -np.inf
    spots.sort(key=lambda s: (s.position_ms, s.class_index))
    return spots


def spots_to_json(video_id: str, spots: list[Spot], class_names: list[str]) -> dict:
    return {
        "video_id": video_id,
        "predictions": [
            {"label": class_names[s.class_index], "position_ms": s.position_ms, "confidence": s.confidence}
            for s in spots
        ],
    }


def write_spots(path: str | Path, video_id: str, spots: list[Spot], class_names: list[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(spots_to_json(video_id, spots, class_names), indent=2) + "\n")
    return path


def read_spots(
    path: str | Path, class_names: list[str], skip_names: tuple[str, ...] = ()
) -> dict[str, list[Spot]]:
    """
    Predictions from a spot file, a JSON list of spot objects, or a directory of ``*.json``.

    Args:
        path: Spot file or directory
        class_names: Vocabulary the labels must come from
        skip_names: File names to ignore when ``path`` is a directory

    Raises:
        DataFormatError: If a file is not valid JSON
        LabelError: If a document lacks ``video_id``/``predictions``, a prediction
            lacks a field, or a prediction names an unknown class
    """
    path = Path(path)
    if path.is_dir():
        files = [f for f in sorted(path.glob("*.json")) if f.name not in skip_names]
    else:
        files = [path]
    index = {name: i for i, name in enumerate(class_names)}
    out: dict[str, list[Spot]] = {}
    for file in files:
        try:
            payload = json.loads(file.read_text())
        except json.JSONDecodeError as e:
            raise DataFormatError(f"Invalid JSON in {file}: {e}") from e
        documents = payload if isinstance(payload, list) else [payload]
        for n, doc in enumerate(documents):
            if not isinstance(doc, dict) or "video_id" not in doc or not isinstance(doc.get("predictions"), list):
                raise LabelError(f"{file}: spot document {n} needs 'video_id' and a 'predictions' list")
            spots = out.setdefault(doc["video_id"], [])
            for i, p in enumerate(doc["predictions"]):
                try:
                    label = p["label"]
                    spot = (int(p["position_ms"]), float(p["confidence"]))
                except (KeyError, TypeError, ValueError) as e:
                    raise LabelError(
                        f"{file}: prediction {i} of video '{doc['video_id']}' needs label, position_ms "
                        f"and confidence ({type(e).__name__}: {e})"
                    ) from e
                if label not in index:
                    raise LabelError(f"{file}: unknown label '{label}'. Valid labels: {', '.join(class_names)}")
                spots.append(Spot(index[label], *spot))
    return out


def spot_video(
    model: SpottingModel,
    seq: FeatureSequence,
    nms_window_s: float,
    threshold: float | None = None,
    batch_size: int = DEFAULT_BATCH,
    threads: int = 1,
) -> list[Spot]:
    """Dense actionness followed by NMS for one video."""
    curve = dense_actionness(model, seq, batch_size=batch_size, threads=threads)
    return nms(curve, nms_window_s, threshold)
