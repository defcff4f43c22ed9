"""Action annotations, class vocabularies and dataset splits on disk.

Layout::

    dataset_root/classes.json                    {"label": index, ...}
    dataset_root/{split}/{video_id}.feat
    dataset_root/{split}/{video_id}.labels.json  [{"label", "position_ms", "visible"}, ...]
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DataFormatError, LabelError
from .features import FeatureSequence, load_features

CLASSES_FILE = "classes.json"
LABELS_SUFFIX = ".labels.json"
FEATURES_SUFFIX = ".feat"
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class GroundTruthAction:
    """One annotated action anchored at a single timestamp."""

    class_index: int
    position_ms: int
    visible: bool = True


@dataclass
class Video:
    """Features of one video with its annotations."""

    features: FeatureSequence
    actions: list[GroundTruthAction] = field(default_factory=list)

    @property
    def video_id(self) -> str:
        return self.features.video_id


def save_classes(root: str | Path, class_names: list[str] | tuple[str, ...]) -> Path:
    path = Path(root) / CLASSES_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    mapping = {name: i for i, name in enumerate(class_names)}
    path.write_text(json.dumps(mapping, indent=2) + "\n")
    return path


def load_classes(root: str | Path) -> list[str]:
    """
    Class names ordered by index from ``classes.json`` in ``root`` or its parent.

    Raises:
        FileNotFoundError: If neither location has the file
        LabelError: If the indices are not 0..C-1
    """
    root = Path(root)
    candidates = [root / CLASSES_FILE, root.parent / CLASSES_FILE]
    path = next((p for p in candidates if p.exists()), None)
    if path is None:
        raise FileNotFoundError(f"{CLASSES_FILE} not found in {root} or {root.parent}")
    mapping = _read_json(path)
    if not isinstance(mapping, dict):
        raise LabelError(f"{path}: expected an object mapping label to index")
    names = sorted(mapping, key=mapping.get)
    if [mapping[n] for n in names] != list(range(len(names))):
        raise LabelError(f"{path}: class indices must be exactly 0..{len(names) - 1}")
    return names


def save_labels(
    actions: list[GroundTruthAction], path: str | Path, class_names: list[str] | tuple[str, ...]
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = [
        {"label": class_names[a.class_index], "position_ms": int(a.position_ms), "visible": bool(a.visible)}
        for a in actions
    ]
    path.write_text(json.dumps(records, indent=2) + "\n")
    return path


def load_labels(path: str | Path, class_names: list[str] | tuple[str, ...]) -> list[GroundTruthAction]:
    """
    Parse a label file against a class vocabulary.

    Raises:
        LabelError: Unknown label or malformed record
    """
    path = Path(path)
    records = _read_json(path)
    if not isinstance(records, list):
        raise LabelError(f"{path}: expected a JSON array of actions")
    index = {name: i for i, name in enumerate(class_names)}
    actions = []
    for i, record in enumerate(records):
        try:
            label = record["label"]
            position = int(record["position_ms"])
        except (KeyError, TypeError, ValueError) as e:
            raise LabelError(f"{path}: record {i} is malformed: {e}") from e
        if label not in index:
            raise LabelError(f"{path}: unknown label '{label}'. Valid labels: {', '.join(class_names)}")
        actions.append(GroundTruthAction(index[label], position, bool(record.get("visible", True))))
    return actions


def load_split(root: str | Path, split: str) -> tuple[list[Video], list[str]]:
    """
    Load every video of ``root/split`` in sorted video-id order.

    Returns:
        Tuple of (videos, class names)
    """
    root = Path(root)
    class_names = load_classes(root)
    split_dir = root / split
    if not split_dir.is_dir():
        raise FileNotFoundError(f"split directory not found: {split_dir}")
    videos = []
    for feat_path in sorted(split_dir.glob(f"*{FEATURES_SUFFIX}")):
        video_id = feat_path.name.removesuffix(FEATURES_SUFFIX)
        seq = load_features(feat_path, video_id)
        label_path = split_dir / f"{video_id}{LABELS_SUFFIX}"
        actions = load_labels(label_path, class_names) if label_path.exists() else []
        videos.append(Video(seq, actions))
    return videos, class_names


def load_truth_dir(path: str | Path) -> tuple[dict[str, list[GroundTruthAction]], list[str]]:
    """Ground truth of every ``*.labels.json`` in a directory, keyed by video id."""
    path = Path(path)
    class_names = load_classes(path)
    truth = {
        p.name.removesuffix(LABELS_SUFFIX): load_labels(p, class_names)
        for p in sorted(path.glob(f"*{LABELS_SUFFIX}"))
    }
    return truth, class_names


def _read_json(path: Path):
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise DataFormatError(f"Invalid JSON in {path}: {e}") from e
