"""Command-line interface: dataset generation, training, spotting, evaluation and checks."""

import json
import sys
from contextlib import redirect_stdout
from pathlib import Path
from typing import Annotated, Any

import cyclopts
from cyclopts import CycloptsError, Parameter

from .ablation import (
    DEFAULT_NMS_WINDOWS,
    DEFAULT_VARIANTS,
    format_ablation,
    run_ablation,
)
from .bench import bench_pool
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RUN_CONFIG_FILE, RunConfig, resolve_run_config, write_run_config
from .data.labels import load_split, load_truth_dir
from .data.synthetic import gen_synthetic_dataset
from .errors import (
    ConfigError,
    DataFormatError,
    NumericError,
    ShapeError,
    SpottingError,
    SyntheticDatasetError,
)
from .evaluation import average_map, format_report, report_to_json
from .gradcheck import format_report as format_gradcheck
from .gradcheck import run_suite
from .logs import configure_logging
from .model import SpottingModel
from .response import build_artifact_summary, json_response, summarize_comparisons
from .spotting import read_spots, spot_video, write_spots
from .training import chunks_from_videos, train, write_train_log

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

CHECKPOINT_NAME = "model.spkt"
TRAIN_LOG_NAME = "train_log.jsonl"
TIMING_LOG_NAME = "train_timing.jsonl"
ABLATION_DEFAULTS = {"model.clusters": 8, "model.reduced_dim": 32}

app = cyclopts.App(
    name="temporal-spotting",
    help="Temporally-aware pooling for action spotting: generate, train, spot, evaluate, verify.",
)

_state: dict[str, Any] = {"quiet": False}


def _progress() -> bool:
    return not _state["quiet"]


def _emit(payload: Any) -> None:
    print(json_response(payload))


def _config(config: Path | None, overrides: dict[str, Any]) -> RunConfig:
    return resolve_run_config(config, overrides)


@app.command(name="gen-synth")
def gen_synth(
    *,
    out: Path,
    seed: int | None = None,
    games: int | None = None,
    val_games: int | None = None,
    test_games: int | None = None,
    config: Path | None = None,
) -> None:
    """Generate the seeded synthetic dataset.

    Args:
        out: Dataset root to write
        seed: Generator seed
        games: Number of training games
        val_games: Number of validation games
        test_games: Number of test games
        config: JSON run configuration file
    """
    run_config = _config(
        config,
        {
            "seed": seed,
            "synthetic.train_games": games,
            "synthetic.val_games": val_games,
            "synthetic.test_games": test_games,
        },
    )
    root = gen_synthetic_dataset(run_config.synthetic, out)
    write_run_config(run_config, root)
    _emit(build_artifact_summary("gen-synth", [str(root)], seed=run_config.seed))


@app.command(name="train")
def train_command(
    *,
    data: Path,
    out: Path,
    pool: str | None = None,
    clusters: int | None = None,
    reduced_dim: int | None = None,
    window: float | None = None,
    projection: bool = True,
    lr: float | None = None,
    batch_size: int | None = None,
    max_epochs: int | None = None,
    seed: int | None = None,
    config: Path | None = None,
) -> None:
    """Train a spotting model on a dataset's train split, validating on val.

    Args:
        data: Dataset root with train/ and val/ splits
        out: Output directory for the checkpoint, training log and run config
        pool: Pooling variant, e.g. netvlad++, netvlad, max++, avg
        clusters: Total clusters K (split evenly for ++ variants)
        reduced_dim: Projection output dimension
        window: Chunk length T in seconds
        projection: Learn a linear projection before pooling (--no-projection pools the input features)
        lr: Initial learning rate
        batch_size: Chunks per mini-batch
        max_epochs: Safety cap on epochs
        seed: Seed for initialization and shuffling
        config: JSON run configuration file
    """
    overrides: dict[str, Any] = {
        "seed": seed,
        "model.clusters": clusters,
        "model.reduced_dim": reduced_dim,
        "model.window_s": window,
        "model.use_projection": None if projection else False,
        "train.initial_lr": lr,
        "train.batch_size": batch_size,
        "train.max_epochs": max_epochs,
    }
    if pool is not None:
        overrides["model.kind"] = pool.removesuffix("++")
        overrides["model.temporally_aware"] = pool.endswith("++")
    run_config = _config(config, overrides)

    train_videos, class_names = load_split(data, "train")
    val_videos, _ = load_split(data, "val")
    if not train_videos or not val_videos:
        raise FileNotFoundError(f"{data} needs nonempty train/ and val/ splits")
    run_config = run_config.with_input_dim(train_videos[0].features.dim)
    model_config = run_config.model.model_config(class_names, run_config.seed)
    model = SpottingModel.create(model_config)
    window_s = model_config.window.duration_s
    best, log = train(
        model,
        chunks_from_videos(train_videos, window_s, len(class_names)),
        chunks_from_videos(val_videos, window_s, len(class_names)),
        run_config.train,
        progress=_progress(),
    )
    out.mkdir(parents=True, exist_ok=True)
    checkpoint = save_checkpoint(best, out / CHECKPOINT_NAME)
    # train_log.jsonl carries no wall time; timings get their own file
    log_path = write_train_log(log, out / TRAIN_LOG_NAME, include_wall_time=False)
    write_train_log(log, out / TIMING_LOG_NAME)
    write_run_config(run_config, out)
    _emit(
        build_artifact_summary(
            "train",
            [str(checkpoint), str(log_path)],
            epochs=len(log.records),
            best_epoch=log.best_epoch,
            best_val_loss=log.best_val_loss,
        )
    )


@app.command(name="spot")
def spot_command(
    *,
    checkpoint: Path,
    data: Path,
    out: Path,
    split: str = "test",
    nms_window: float | None = None,
    nms_threshold: float | None = None,
    threads: int | None = None,
    config: Path | None = None,
) -> None:
    """Run dense inference and NMS over every video of a split.

    Args:
        checkpoint: Model checkpoint written by train
        data: Dataset root
        out: Directory for one spot JSON file per video
        split: Split to spot
        nms_window: NMS window T_NMS in seconds
        nms_threshold: Drop spots below this confidence
        threads: Worker threads for dense inference
        config: JSON run configuration file
    """
    run_config = _config(
        config,
        {"spot.nms_window_s": nms_window, "spot.nms_threshold": nms_threshold, "threads": threads},
    )
    model = load_checkpoint(checkpoint)
    videos, class_names = load_split(data, split)
    outputs = []
    for video in videos:
        spots = spot_video(
            model,
            video.features,
            run_config.spot.nms_window_s,
            run_config.spot.nms_threshold,
            run_config.spot.batch_size,
            run_config.threads,
        )
        outputs.append(str(write_spots(out / f"{video.video_id}.json", video.video_id, spots, class_names)))
    write_run_config(run_config, out)
    _emit(build_artifact_summary("spot", outputs, videos=len(videos)))


@app.command(name="eval")
def eval_command(
    *,
    pred: Path,
    truth: Path,
    out: Path | None = None,
    config: Path | None = None,
) -> None:
    """Score spot predictions against ground truth with Average-mAP.

    Args:
        pred: Spot JSON file, or a directory of them
        truth: Directory of *.labels.json files (classes.json there or one level up)
        out: Optional path for the JSON report
        config: JSON run configuration file
    """
    run_config = _config(config, {})
    ground_truth, class_names = load_truth_dir(truth)
    predictions = read_spots(pred, class_names, skip_names=(RUN_CONFIG_FILE,))
    report = average_map(predictions, ground_truth, class_names, run_config.eval.deltas)
    print(format_report(report))
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json_response(report_to_json(report)) + "\n")
        write_run_config(run_config, out.parent)


@app.command(name="check-grad")
def check_grad(*, seed: int = 0, instances: int = 20) -> None:
    """Compare every analytic gradient with central finite differences.

    Args:
        seed: Seed for the random tiny problems
        instances: Number of random instances per component
    """
    report = run_suite(seed, instances)
    print(format_gradcheck(report))
    if not report.passed:
        raise NumericError(f"gradient check failed for: {', '.join(report.failures)}")


@app.command(name="bench-pool")
def bench_pool_command(
    *,
    frames: int = 30,
    clusters: int = 64,
    dim: int = 512,
    batch: int = 256,
    micro_batch: int = 16,
    repeats: int = 3,
    out: Path | None = None,
) -> None:
    """Time naive vs efficient NetVLAD and record peak allocations.

    Args:
        frames: Frames per chunk N
        clusters: Clusters K
        dim: Feature dimension D
        batch: Chunks per batch
        micro_batch: Chunks per kernel call
        repeats: Timed repetitions (best is kept)
        out: Optional path for the JSON record
    """
    record = bench_pool(frames, clusters, dim, batch, micro_batch, repeats)
    payload = record.to_dict()
    _emit(payload)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json_response(payload) + "\n")


@app.command(name="ablate")
def ablate(
    *,
    data: Path,
    out: Path,
    variants: list[str] | None = None,
    runs: int = 1,
    clusters: int | None = None,
    reduced_dim: int | None = None,
    nms_windows: list[float] | None = None,
    windows: list[float] | None = None,
    cluster_counts: list[int] | None = None,
    sweep_variant: str | None = None,
    max_epochs: int | None = None,
    seed: int | None = None,
    config: Path | None = None,
) -> None:
    """Train and score every pooling variant, then compare ++ against plain.

    Args:
        data: Dataset root with train/val/test splits
        out: Output directory for ablation.json and the run config
        variants: Variants to run, e.g. netvlad++, max, netvlad++/noproj (default: all)
        runs: Seeded runs per variant
        clusters: Total clusters K for cluster-based variants (default 8)
        reduced_dim: Projection output dimension (default 32)
        nms_windows: NMS windows in seconds for the NMS sweep
        windows: Chunk lengths T in seconds for the window sweep, e.g. 5 10 15 20 30 (default: no sweep)
        cluster_counts: Cluster counts K for the cluster sweep, e.g. 4 8 16 32 64 (default: no sweep)
        sweep_variant: Variant retrained by the window and cluster sweeps (default: first variant)
        max_epochs: Safety cap on epochs per run
        seed: Base seed
        config: JSON run configuration file
    """
    run_config = resolve_run_config(
        config,
        {
            "seed": seed,
            "model.clusters": clusters,
            "model.reduced_dim": reduced_dim,
            "train.max_epochs": max_epochs,
        },
        defaults=ABLATION_DEFAULTS,
    )
    report = run_ablation(
        data,
        run_config,
        tuple(variants or DEFAULT_VARIANTS),
        runs,
        tuple(nms_windows or DEFAULT_NMS_WINDOWS),
        progress=_progress(),
        windows=tuple(windows or ()),
        cluster_counts=tuple(cluster_counts or ()),
        sweep_variant=sweep_variant,
    )
    print(format_ablation(report), file=sys.stderr)
    payload = report.to_dict()
    payload["summary"] = summarize_comparisons(report.comparisons())
    out.mkdir(parents=True, exist_ok=True)
    (out / "ablation.json").write_text(json_response(payload) + "\n")
    write_run_config(run_config, out)
    _emit(payload["summary"])


@app.meta.default
def launcher(
    *tokens: Annotated[str, Parameter(show=False, allow_leading_hyphen=True)],
    quiet: bool = False,
    log_level: str | None = None,
) -> None:
    """Global options.

    Args:
        quiet: Hide progress bars
        log_level: Logging level (default: $TEMPORAL_SPOTTING_LOG_LEVEL or WARNING)
    """
    _state["quiet"] = quiet
    configure_logging(log_level)
    app(tokens, exit_on_error=False, print_error=False)


def _print_usage(argv: list[str]) -> None:
    """Usage text of the named command (or of the app) on stderr."""
    commands = set(app)
    tokens = [t for t in argv if t in commands][:1]
    with redirect_stdout(sys.stderr):
        app.help_print(tokens)


def run(argv: list[str] | None = None) -> int:
    """
    Dispatch one command line.

    Returns:
        0 on success, 1 on usage errors, 2 on data or config errors,
        3 on numeric failures
    """
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        app.meta(argv, exit_on_error=False, print_error=False)
    except CycloptsError as e:
        print(f"Error: {e}", file=sys.stderr)
        _print_usage(argv)
        return EXIT_USAGE
    except SystemExit as e:
        if e.code is None:
            return EXIT_OK
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except NumericError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataFormatError, ConfigError, SyntheticDatasetError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (ShapeError, SpottingError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    """Main entry point for the CLI."""
    sys.exit(run())


if __name__ == "__main__":
    main()
