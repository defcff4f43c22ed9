"""Pooling-variant sweep: train, spot and score every variant on one dataset."""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from tqdm import tqdm

from .config import ModelSection, RunConfig
from .data.labels import Video, load_split
from .data.synthetic import load_synthetic_meta
from .evaluation import EvalReport, average_map
from .model import SpottingModel, param_count
from .pooling import PoolSpec
from .spotting import dense_actionness, nms
from .training import chunks_from_videos, train

logger = logging.getLogger(__name__)

NO_PROJECTION = "noproj"
DEFAULT_VARIANTS = (
    "netvlad++",
    "netvlad",
    "netrvlad++",
    "netrvlad",
    "vlad++",
    "vlad",
    "max++",
    "max",
    "avg++",
    "avg",
    f"netvlad++/{NO_PROJECTION}",
)
DEFAULT_NMS_WINDOWS = (10.0, 20.0, 30.0, 40.0, 60.0)
THRESHOLD_ARM = 0.5


def variant_section(label: str, section: ModelSection) -> ModelSection:
    """
    Model settings for a variant label such as ``max++`` or ``netvlad++/noproj``.

    Raises:
        ValueError: On an unknown ``/suffix``
    """
    pool_label, _, suffix = label.partition("/")
    if suffix not in ("", NO_PROJECTION):
        raise ValueError(f"unknown variant suffix '{suffix}' in '{label}'; valid: {NO_PROJECTION}")
    spec = PoolSpec.from_label(pool_label)
    return replace(
        section,
        kind=spec.kind,
        temporally_aware=spec.temporally_aware,
        use_projection=section.use_projection and not suffix,
    )


@dataclass
class VariantResult:
    """Average-mAP of one pooling variant over several seeded runs."""

    label: str
    head_params: int
    average_maps: list[float] = field(default_factory=list)
    ambiguous_maps: list[float] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.average_maps))

    @property
    def ambiguous_mean(self) -> float | None:
        return float(np.mean(self.ambiguous_maps)) if self.ambiguous_maps else None

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "head_params": self.head_params,
            "average_map": {
                "mean": self.mean,
                "min": float(np.min(self.average_maps)),
                "max": float(np.max(self.average_maps)),
                "runs": list(self.average_maps),
            },
            "ambiguous_average_map": self.ambiguous_mean,
        }


@dataclass
class AblationReport:
    variants: list[VariantResult]
    nms_sweep: dict[str, dict[float, float]]
    ambiguous_pairs: list[tuple[str, str]]
    sweep_variant: str | None = None
    window_sweep: dict[float, float] = field(default_factory=dict)
    cluster_sweep: dict[int, float] = field(default_factory=dict)
    thresholded: dict[str, float] = field(default_factory=dict)

    def result(self, label: str) -> VariantResult:
        return next(v for v in self.variants if v.label == label)

    def comparisons(self) -> list[dict]:
        """Each ``x++`` against its plain ``x``, where both were run."""
        labels = {v.label for v in self.variants}
        out = []
        for v in self.variants:
            base = v.label.removesuffix("++")
            if v.label.endswith("++") and base in labels:
                plain = self.result(base)
                out.append(
                    {
                        "variant": v.label,
                        "baseline": base,
                        "variant_map": v.mean,
                        "baseline_map": plain.mean,
                        "passed": v.mean > plain.mean,
                    }
                )
        return out

    def to_dict(self) -> dict:
        return {
            "variants": [v.to_dict() for v in self.variants],
            "nms_sweep": {
                label: {f"{w:g}": value for w, value in sweep.items()}
                for label, sweep in self.nms_sweep.items()
            },
            "ambiguous_pairs": [list(p) for p in self.ambiguous_pairs],
            "comparisons": self.comparisons(),
            "sweep_variant": self.sweep_variant,
            "window_sweep": {f"{w:g}": value for w, value in self.window_sweep.items()},
            "cluster_sweep": {str(k): value for k, value in self.cluster_sweep.items()},
            "thresholded": {"threshold": THRESHOLD_ARM, "average_map": dict(self.thresholded)},
        }


def ambiguous_map(report: EvalReport, pairs: list[tuple[str, str]]) -> float | None:
    """Mean class Average-AP over the classes that appear in an ambiguous pair."""
    names = sorted({name for pair in pairs for name in pair})
    rows = [report.class_names.index(n) for n in names if n in report.class_names]
    if not rows:
        return None
    return float(np.nanmean(report.class_average_ap[rows]))


def train_variant(
    section: ModelSection,
    train_videos: list[Video],
    val_videos: list[Video],
    class_names: list[str],
    config: RunConfig,
    progress: bool = False,
) -> SpottingModel:
    """Train one model under ``section`` and ``config.train``; returns the best-validation model."""
    model_config = section.model_config(class_names, config.seed)
    model = SpottingModel.create(model_config)
    window_s = model_config.window.duration_s
    train_chunks = chunks_from_videos(train_videos, window_s, len(class_names))
    val_chunks = chunks_from_videos(val_videos, window_s, len(class_names))
    best, _ = train(model, train_chunks, val_chunks, config.train, progress=progress)
    return best


def _curves(model: SpottingModel, videos: list[Video], config: RunConfig) -> dict[str, np.ndarray]:
    return {v.video_id: dense_actionness(model, v.features, config.spot.batch_size, config.threads) for v in videos}


def _score(
    curves: dict[str, np.ndarray],
    videos: list[Video],
    class_names: list[str],
    config: RunConfig,
    window: float,
    threshold: float | None,
) -> EvalReport:
    predictions = {video_id: nms(curve, window, threshold) for video_id, curve in curves.items()}
    truth = {v.video_id: v.actions for v in videos}
    return average_map(predictions, truth, class_names, config.eval.deltas, breakdown=False)


def run_ablation(
    root: str | Path,
    config: RunConfig,
    variants: tuple[str, ...] = DEFAULT_VARIANTS,
    runs: int = 1,
    nms_windows: tuple[float, ...] = DEFAULT_NMS_WINDOWS,
    progress: bool = True,
    windows: tuple[float, ...] = (),
    cluster_counts: tuple[int, ...] = (),
    sweep_variant: str | None = None,
) -> AblationReport:
    """
    Train every variant ``runs`` times (seeds ``config.seed + r``) and score it on the test split.

    Average-mAP uses ``config.spot.nms_window_s``. From the first run of each
    variant the NMS sweep re-scores the actionness curves at every window in
    ``nms_windows``, and the threshold arm re-scores them with spots below
    0.5 dropped. The chunk-length and cluster-count sweeps retrain
    ``sweep_variant`` once per value.

    Args:
        root: Dataset root with train/val/test splits
        config: Resolved run configuration (``model.input_dim`` may be unset)
        variants: Labels such as ``netvlad++``, ``max`` or ``netvlad++/noproj``
        runs: Seeded repetitions per variant
        nms_windows: NMS windows (seconds) for the sweep
        windows: Chunk lengths T (seconds) for the window sweep
        cluster_counts: Total cluster counts K for the cluster sweep
        sweep_variant: Variant the window and cluster sweeps retrain (default: the first one)

    Returns:
        Per-variant results, the sweeps and the ambiguous class pairs
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    if not variants:
        raise ValueError("at least one variant is needed")
    nms_windows = tuple(float(w) for w in nms_windows)
    sweep_variant = sweep_variant or variants[0]
    sweep_section = variant_section(sweep_variant, config.model)
    if cluster_counts and not sweep_section.pool_spec().uses_clusters:
        raise ValueError(f"cluster sweep needs a cluster-based variant, got '{sweep_variant}'")
    train_videos, class_names = load_split(root, "train")
    val_videos, _ = load_split(root, "val")
    test_videos, _ = load_split(root, "test")
    config = config.with_input_dim(train_videos[0].features.dim)
    sweep_section = replace(sweep_section, input_dim=config.model.input_dim)
    meta = load_synthetic_meta(root)
    pairs = meta[1] if meta is not None else []
    main_window = config.spot.nms_window_s

    def fit_and_score(section: ModelSection, run_config: RunConfig) -> tuple[dict[str, np.ndarray], EvalReport]:
        model = train_variant(section, train_videos, val_videos, class_names, run_config)
        curves = _curves(model, test_videos, run_config)
        return curves, _score(curves, test_videos, class_names, run_config, main_window, config.spot.nms_threshold)

    report = AblationReport([], {}, pairs, sweep_variant=sweep_variant)
    total = len(variants) * runs + len(windows) + len(cluster_counts)
    bar = tqdm(total=total, desc="ablate", unit="run", disable=not progress)
    for label in variants:
        section = variant_section(label, config.model)
        result = VariantResult(label, param_count(section.model_config(class_names, config.seed))["head"])
        for r in range(runs):
            run_config = replace(config, seed=config.seed + r)
            curves, main = fit_and_score(section, run_config)
            result.average_maps.append(main.average_map)
            ambiguous = ambiguous_map(main, pairs)
            if ambiguous is not None:
                result.ambiguous_maps.append(ambiguous)
            if r == 0:
                report.nms_sweep[label] = {
                    w: _score(curves, test_videos, class_names, run_config, w, config.spot.nms_threshold).average_map
                    for w in nms_windows
                }
                report.thresholded[label] = _score(
                    curves, test_videos, class_names, run_config, main_window, THRESHOLD_ARM
                ).average_map
            logger.info("ablation variant=%s run=%d average_map=%.4f", label, r, main.average_map)
            bar.update(1)
        report.variants.append(result)

    for window_s in windows:
        section = replace(sweep_section, window_s=float(window_s), before_s=None, after_s=None)
        _, main = fit_and_score(section, config)
        report.window_sweep[float(window_s)] = main.average_map
        logger.info("ablation variant=%s window_s=%g average_map=%.4f", sweep_variant, window_s, main.average_map)
        bar.update(1)
    for clusters in cluster_counts:
        section = replace(sweep_section, clusters=int(clusters), clusters_before=None, clusters_after=None)
        _, main = fit_and_score(section, config)
        report.cluster_sweep[int(clusters)] = main.average_map
        logger.info("ablation variant=%s clusters=%d average_map=%.4f", sweep_variant, clusters, main.average_map)
        bar.update(1)
    bar.close()
    return report


def _sweep_table(title: str, width: int, keys: list, row_label: str, values: dict) -> list[str]:
    return [
        "",
        f"{title:<{width}}  " + "  ".join(f"{k:>7}" for k in keys),
        f"{row_label:<{width}}  " + "  ".join(f"{100 * values[k]:7.2f}" for k in values),
    ]


def format_ablation(report: AblationReport) -> str:
    """Plain-text comparison table, one row per variant, then one block per sweep."""
    width = max(len("NMS window"), *(len(v.label) for v in report.variants))
    header = (
        f"{'variant':<{width}}  {'params':>8}  {'Avg-mAP':>8}  {'min':>6}  {'max':>6}  {'ambig.':>6}"
        f"  {f'thr {THRESHOLD_ARM:g}':>7}"
    )
    lines = [header, "-" * len(header)]
    for v in report.variants:
        ambiguous = v.ambiguous_mean
        thresholded = report.thresholded.get(v.label)
        lines.append(
            f"{v.label:<{width}}  {v.head_params:>8}  {100 * v.mean:8.2f}  "
            f"{100 * min(v.average_maps):6.2f}  {100 * max(v.average_maps):6.2f}  "
            + ("     -" if ambiguous is None else f"{100 * ambiguous:6.2f}")
            + ("        -" if thresholded is None else f"  {100 * thresholded:7.2f}")
        )
    if report.nms_sweep:
        windows = list(next(iter(report.nms_sweep.values())))
        lines.append("")
        lines.append(f"{'NMS window':<{width}}  " + "  ".join(f"{w:>6g}s" for w in windows))
        for label, sweep in report.nms_sweep.items():
            lines.append(f"{label:<{width}}  " + "  ".join(f"{100 * sweep[w]:7.2f}" for w in windows))
    if report.window_sweep:
        keys = [f"{w:g}s" for w in report.window_sweep]
        lines += _sweep_table("window T", width, keys, report.sweep_variant or "", report.window_sweep)
    if report.cluster_sweep:
        keys = [f"K={k}" for k in report.cluster_sweep]
        lines += _sweep_table("clusters", width, keys, report.sweep_variant or "", report.cluster_sweep)
    return "\n".join(lines)
