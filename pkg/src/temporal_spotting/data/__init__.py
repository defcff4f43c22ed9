"""Feature and label I/O, training chunks and the synthetic dataset."""

from .chunks import TrainingChunk, make_training_chunks, stack_chunks, window_frames
from .features import FeatureSequence, load_features, save_features
from .labels import (
    SPLITS,
    GroundTruthAction,
    Video,
    load_classes,
    load_labels,
    load_split,
    load_truth_dir,
    save_classes,
    save_labels,
)
from .synthetic import (
    DEFAULT_CLASSES,
    ClassDefinition,
    SyntheticSpec,
    gen_synthetic_dataset,
    generate_video,
    load_synthetic_meta,
    make_patterns,
)

__all__ = [
    "DEFAULT_CLASSES",
    "SPLITS",
    "ClassDefinition",
    "FeatureSequence",
    "GroundTruthAction",
    "SyntheticSpec",
    "TrainingChunk",
    "Video",
    "gen_synthetic_dataset",
    "generate_video",
    "load_classes",
    "load_features",
    "load_labels",
    "load_split",
    "load_synthetic_meta",
    "load_truth_dir",
    "make_patterns",
    "make_training_chunks",
    "save_classes",
    "save_features",
    "save_labels",
    "stack_chunks",
    "window_frames",
]
