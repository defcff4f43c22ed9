"""Frame feature files.

Layout (little-endian)::

    b"FEAT" | u32 version=1 | u32 N | u32 D | f32 frame_rate | N×D f32, row-major
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import BadMagicError, DataFormatError, TruncatedPayloadError, UnsupportedVersionError

FEATURE_MAGIC = b"FEAT"
FEATURE_VERSION = 1
_HEADER = struct.Struct("<4sIIIf")


@dataclass
class FeatureSequence:
    """Per-video frame features (stored as float32, computed on as float64)."""

    features: np.ndarray
    frame_rate: float
    video_id: str

    def __post_init__(self) -> None:
        if self.frame_rate <= 0:
            raise ValueError(f"frame_rate must be positive, got {self.frame_rate}")
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ValueError(f"features must be a non-empty N×D matrix, got {self.features.shape}")

    @property
    def n_frames(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def duration_ms(self) -> float:
        return self.n_frames * 1000.0 / self.frame_rate

    def as_float64(self) -> np.ndarray:
        return np.asarray(self.features, dtype=np.float64)

    def frame_ms(self, index: int) -> int:
        """Timestamp of frame ``index`` in whole milliseconds."""
        return int(round(index * 1000.0 / self.frame_rate))


def save_features(seq: FeatureSequence, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n, d = seq.features.shape
    header = _HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, n, d, seq.frame_rate)
    payload = np.ascontiguousarray(seq.features, dtype="<f4").tobytes()
    path.write_bytes(header + payload)
    return path


def load_features(path: str | Path, video_id: str | None = None) -> FeatureSequence:
    """
    Read a feature file written by :func:`save_features`.

    Args:
        path: Feature file
        video_id: Defaults to the file stem

    Raises:
        BadMagicError: Wrong magic bytes
        UnsupportedVersionError: Version other than 1
        TruncatedPayloadError: Fewer payload bytes than the header announces
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise TruncatedPayloadError(str(path), _HEADER.size, len(data))
    magic, version, n, d, frame_rate = _HEADER.unpack_from(data)
    if magic != FEATURE_MAGIC:
        raise BadMagicError(f"{path}: expected magic {FEATURE_MAGIC!r}, found {magic!r}")
    if version != FEATURE_VERSION:
        raise UnsupportedVersionError(f"{path}: feature format version {version} is not supported")

    expected = 4 * n * d
    actual = len(data) - _HEADER.size
    if actual < expected:
        raise TruncatedPayloadError(str(path), expected, actual)
    if actual > expected:
        raise DataFormatError(f"{path}: {actual - expected} trailing bytes after payload")
    features = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(n, d).astype(np.float32)
    return FeatureSequence(features, float(frame_rate), video_id or path.name.removesuffix(".feat"))
