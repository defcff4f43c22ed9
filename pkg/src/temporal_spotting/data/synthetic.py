"""Seeded synthetic spotting dataset where classes differ only by temporal order.

Background frames are N(0, σ²I). An action of class (u → v) adds pattern u to
the frames in [-T_b, 0) around it and pattern v to the frames in [0, T_a).
Ambiguous pairs swap the same two patterns. With T_b = T_a the layout of one
class is the time mirror of the other, so a window at offset +s from an action
of either class holds the same multiset of frames as a window at offset -s
from the other: an order-agnostic pooler sees identically distributed inputs.
Actions sit further apart than the largest evaluation tolerance, so a
detection at one action falls outside every tolerance of its neighbours.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import SyntheticDatasetError
from .features import FeatureSequence, save_features
from .labels import FEATURES_SUFFIX, LABELS_SUFFIX, SPLITS, GroundTruthAction, save_classes, save_labels

logger = logging.getLogger(__name__)

SYNTHETIC_FILE = "synthetic.json"
_PATTERN_STREAM = 0x5EED


@dataclass(frozen=True)
class ClassDefinition:
    """An action class as a (before pattern, after pattern) pair of pattern ids."""

    name: str
    before: int
    after: int


DEFAULT_CLASSES = (
    ClassDefinition("goal", 0, 1),
    ClassDefinition("penalty", 1, 0),
    ClassDefinition("corner", 2, 3),
    ClassDefinition("throw-in", 3, 2),
    ClassDefinition("shot", 0, 4),
    ClassDefinition("foul", 5, 1),
)


@dataclass(frozen=True)
class SyntheticSpec:
    """Everything that determines a synthetic dataset, byte for byte."""

    seed: int = 0
    train_games: int = 12
    val_games: int = 3
    test_games: int = 3
    duration_s: float = 1200.0
    frame_rate: float = 2.0
    dim: int = 32
    noise_sigma: float = 1.0
    amplitude: float = 4.0
    actions_per_game: int = 8
    unshown_rate: float = 0.2
    unshown_scale: float = 0.6
    before_s: float = 7.5
    after_s: float = 7.5
    min_gap_s: float = 60.0
    max_retries: int = 200
    classes: tuple[ClassDefinition, ...] = field(default_factory=lambda: DEFAULT_CLASSES)

    def __post_init__(self) -> None:
        if len(self.classes) < 2:
            raise ValueError("synthetic dataset needs at least 2 classes")
        if self.frame_rate <= 0 or self.dim < 1:
            raise ValueError("frame_rate and dim must be positive")

    @property
    def class_names(self) -> list[str]:
        return [c.name for c in self.classes]

    @property
    def pattern_count(self) -> int:
        return 1 + max(max(c.before, c.after) for c in self.classes)

    def games(self, split: str) -> int:
        return {"train": self.train_games, "val": self.val_games, "test": self.test_games}[split]

    def ambiguous_pairs(self) -> list[tuple[str, str]]:
        """Class pairs whose patterns are the same two, in swapped order."""
        pairs = []
        for i, a in enumerate(self.classes):
            for b in self.classes[i + 1 :]:
                if (a.before, a.after) == (b.after, b.before) and a.before != a.after:
                    pairs.append((a.name, b.name))
        return pairs

    def to_dict(self) -> dict:
        data = asdict(self)
        data["classes"] = [asdict(c) for c in self.classes]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticSpec":
        data = dict(data)
        if "classes" in data:
            data["classes"] = tuple(ClassDefinition(**c) for c in data["classes"])
        return cls(**data)


def make_patterns(spec: SyntheticSpec) -> np.ndarray:
    """Pattern directions (P×D), each scaled to norm ``amplitude``."""
    rng = np.random.default_rng([spec.seed, _PATTERN_STREAM])
    raw = rng.standard_normal((spec.pattern_count, spec.dim))
    return spec.amplitude * raw / np.linalg.norm(raw, axis=1, keepdims=True)


def _place_actions(spec: SyntheticSpec, rng: np.random.Generator, n_frames: int) -> list[int]:
    fps = spec.frame_rate
    lo = math.ceil(spec.before_s * fps - 1e-9)
    hi = n_frames - 1 - math.floor(spec.after_s * fps + 1e-9)
    spacing = (spec.before_s + spec.after_s + spec.min_gap_s) * fps
    if hi < lo:
        raise SyntheticDatasetError(f"a {spec.duration_s}s video cannot hold a single action window")
    positions: list[int] = []
    for _ in range(spec.actions_per_game):
        for _attempt in range(spec.max_retries):
            candidate = int(rng.integers(lo, hi + 1))
            if all(abs(candidate - p) > spacing for p in positions):
                positions.append(candidate)
                break
        else:
            raise SyntheticDatasetError(
                f"could not place action {len(positions) + 1}/{spec.actions_per_game} "
                f"after {spec.max_retries} retries; lower actions_per_game or raise duration_s"
            )
    return sorted(positions)


def generate_video(
    spec: SyntheticSpec, index: int, video_id: str, patterns: np.ndarray | None = None
) -> tuple[FeatureSequence, list[GroundTruthAction]]:
    """
    One synthetic video from its own substream (seed, index).

    Returns:
        Tuple of (features, actions sorted by position)
    """
    patterns = make_patterns(spec) if patterns is None else patterns
    rng = np.random.default_rng([spec.seed, 1, index])
    fps = spec.frame_rate
    n_frames = int(round(spec.duration_s * fps))
    positions = _place_actions(spec, rng, n_frames)
    class_ids = rng.integers(len(spec.classes), size=len(positions))
    visible = rng.random(len(positions)) >= spec.unshown_rate
    features = spec.noise_sigma * rng.standard_normal((n_frames, spec.dim))

    n_before = math.floor(spec.before_s * fps + 1e-9)
    n_after = math.floor(spec.after_s * fps + 1e-9)
    actions = []
    for frame, cls_id, shown in zip(positions, class_ids, visible, strict=True):
        definition = spec.classes[int(cls_id)]
        scale = 1.0 if shown else spec.unshown_scale
        features[max(0, frame - n_before) : frame] += scale * patterns[definition.before]
        features[frame : min(n_frames, frame + n_after)] += scale * patterns[definition.after]
        actions.append(
            GroundTruthAction(int(cls_id), int(round(frame * 1000.0 / fps)), bool(shown))
        )
    seq = FeatureSequence(features.astype(np.float32), fps, video_id)
    return seq, actions


def gen_synthetic_dataset(spec: SyntheticSpec, root: str | Path) -> Path:
    """
    Write a full synthetic dataset under ``root``.

    Each video uses an independent substream keyed by its global index, so
    the output does not depend on generation order.

    Returns:
        The dataset root
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    save_classes(root, spec.class_names)
    meta = {"spec": spec.to_dict(), "ambiguous_pairs": [list(p) for p in spec.ambiguous_pairs()]}
    (root / SYNTHETIC_FILE).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    patterns = make_patterns(spec)
    index = 0
    for split in SPLITS:
        for game in range(spec.games(split)):
            video_id = f"{split}_{game:03d}"
            seq, actions = generate_video(spec, index, video_id, patterns)
            save_features(seq, root / split / f"{video_id}{FEATURES_SUFFIX}")
            save_labels(actions, root / split / f"{video_id}{LABELS_SUFFIX}", spec.class_names)
            index += 1
        logger.info("generated split=%s games=%d root=%s", split, spec.games(split), root)
    return root


def load_synthetic_meta(root: str | Path) -> tuple[SyntheticSpec, list[tuple[str, str]]] | None:
    """Generator spec and ambiguous pairs of a synthetic dataset, or None for other datasets."""
    path = Path(root) / SYNTHETIC_FILE
    if not path.exists():
        return None
    meta = json.loads(path.read_text())
    return SyntheticSpec.from_dict(meta["spec"]), [tuple(p) for p in meta["ambiguous_pairs"]]
