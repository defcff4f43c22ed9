"""Training chunks: disjoint T-second windows with multi-label targets."""

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from .features import FeatureSequence
from .labels import GroundTruthAction


@dataclass
class TrainingChunk:
    """
    One classification sample.

    ``target`` has one bit per action class plus a trailing background bit
    that is set iff no action falls inside the chunk.
    """

    frames: np.ndarray
    target: np.ndarray
    center_ms: float
    start_frame: int


def window_frames(window_s: float, frame_rate: float) -> int:
    """
    Frames in a ``window_s`` second window.

    Raises:
        ShapeError: If the window is not a whole number of frames, or shorter than 2
    """
    exact = window_s * frame_rate
    frames = int(round(exact))
    if abs(exact - frames) > 1e-9:
        raise ShapeError(f"window of {window_s}s at {frame_rate} fps is not a whole number of frames")
    if frames < 2:
        raise ShapeError(f"window of {window_s}s at {frame_rate} fps has fewer than 2 frames")
    return frames


def make_training_chunks(
    seq: FeatureSequence,
    labels: list[GroundTruthAction],
    window_s: float,
    class_count: int,
) -> list[TrainingChunk]:
    """
    Cut a video into consecutive windows [kT, (k+1)T), dropping a trailing partial one.

    Args:
        seq: Video features
        labels: Ground-truth actions of the video
        window_s: Chunk length T in seconds
        class_count: Number of action classes (targets get one extra background bit)

    Returns:
        Chunks in temporal order
    """
    frames = window_frames(window_s, seq.frame_rate)
    chunk_ms = frames * 1000.0 / seq.frame_rate
    features = seq.as_float64()
    chunks = []
    for k in range(seq.n_frames // frames):
        start_ms = k * chunk_ms
        end_ms = start_ms + chunk_ms
        target = np.zeros(class_count + 1)
        for action in labels:
            if start_ms <= action.position_ms < end_ms:
                target[action.class_index] = 1.0
        if not target[:class_count].any():
            target[class_count] = 1.0
        chunks.append(
            TrainingChunk(
                frames=features[k * frames : (k + 1) * frames],
                target=target,
                center_ms=start_ms + chunk_ms / 2.0,
                start_frame=k * frames,
            )
        )
    return chunks


def stack_chunks(chunks: list[TrainingChunk]) -> tuple[np.ndarray, np.ndarray]:
    """Batch arrays (B×N×D frames, B×C targets)."""
    if not chunks:
        raise ShapeError("no chunks to stack")
    return np.stack([c.frames for c in chunks]), np.stack([c.target for c in chunks])
