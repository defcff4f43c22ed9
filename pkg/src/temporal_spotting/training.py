"""Mini-batch Adam training with a validation-plateau learning-rate schedule."""

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from tqdm import tqdm

from .data.chunks import TrainingChunk, make_training_chunks, stack_chunks
from .data.labels import Video
from .errors import NumericError, ShapeError
from .model import SpottingModel, bce_loss
from .numerics import AdamOptimizer

logger = logging.getLogger(__name__)

IMPROVEMENT_TOL = 1e-12
# relative slack so that 1e-3 / 10**5 still counts as "not below" 1e-8
_STOP_SLACK = 1e-9


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and schedule settings."""

    initial_lr: float = 1e-3
    decay_factor: float = 10.0
    patience: int = 10
    stop_lr: float = 1e-8
    batch_size: int = 256
    max_epochs: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.decay_factor <= 1.0:
            raise ValueError(f"decay_factor must be > 1, got {self.decay_factor}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if self.initial_lr < 0.0:
            raise ValueError(f"initial_lr must be >= 0, got {self.initial_lr}")
        if self.initial_lr > 0.0 and self.stop_lr >= self.initial_lr:
            raise ValueError(f"stop_lr ({self.stop_lr}) must be below initial_lr ({self.initial_lr})")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be positive")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float
    wall_time_s: float = 0.0


@dataclass
class TrainLog:
    """One record per finished epoch, plus the epoch whose weights were kept."""

    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    @property
    def val_losses(self) -> list[float]:
        return [r.val_loss for r in self.records]

    @property
    def best_val_loss(self) -> float:
        return min(self.val_losses) if self.records else float("inf")

    def deterministic_view(self) -> list[dict]:
        """Records without wall time, for run-to-run comparison."""
        return [{k: v for k, v in asdict(r).items() if k != "wall_time_s"} for r in self.records]


def _is_stopped(lr: float, stop_lr: float) -> bool:
    return lr < stop_lr * (1.0 - _STOP_SLACK)


def lr_schedule_step(history: list[float], lr: float, cfg: TrainConfig) -> tuple[float, bool]:
    """
    Learning rate after the last epoch in ``history``.

    The history is replayed from the start: the counter of non-improving epochs
    resets on every improvement (beyond 1e-12) and on every decay. When the last
    epoch brings the counter to ``patience``, ``lr`` is divided by
    ``decay_factor``.

    The first epoch always improves on the infinite starting best, so a flat
    loss only begins counting at epoch 2. With patience 10, factor 10 and the
    defaults 1e-3 / 1e-8, decays land on epochs 11, 21, ..., 61 and the stop
    flag rises at epoch 61, one past 6 x patience.

    Returns:
        Tuple of (new lr, stop flag); stop is set once lr falls below ``stop_lr``

    Raises:
        ValueError: If ``history`` is empty
    """
    if not history:
        raise ValueError("lr_schedule_step needs at least one validation loss")
    best = float("inf")
    counter = 0
    decayed_now = False
    for loss in history:
        decayed_now = False
        if loss < best - IMPROVEMENT_TOL:
            best = loss
            counter = 0
        else:
            counter += 1
            if counter >= cfg.patience:
                counter = 0
                decayed_now = True
    new_lr = lr / cfg.decay_factor if decayed_now else lr
    return new_lr, _is_stopped(new_lr, cfg.stop_lr)


class LRPlateauScheduler:
    """Stateful counterpart of :func:`lr_schedule_step`, one ``step`` per epoch."""

    def __init__(self, cfg: TrainConfig) -> None:
        self.cfg = cfg
        self.best = float("inf")
        self.counter = 0
        self.decays = 0

    @property
    def lr(self) -> float:
        return self.cfg.initial_lr / self.cfg.decay_factor**self.decays

    def step(self, val_loss: float) -> tuple[float, bool]:
        """Feed one validation loss; returns (lr for the next epoch, stop flag)."""
        if val_loss < self.best - IMPROVEMENT_TOL:
            self.best = val_loss
            self.counter = 0
        else:
            self.counter += 1
            if self.counter >= self.cfg.patience:
                self.counter = 0
                self.decays += 1
                logger.info("lr decay decays=%d lr=%.1e", self.decays, self.lr)
        return self.lr, _is_stopped(self.lr, self.cfg.stop_lr)


def chunks_from_videos(videos: list[Video], window_s: float, class_count: int) -> list[TrainingChunk]:
    """Training chunks of every video, in video order."""
    chunks: list[TrainingChunk] = []
    for video in videos:
        chunks.extend(make_training_chunks(video.features, video.actions, window_s, class_count))
    return chunks


def evaluate_loss(model: SpottingModel, chunks: list[TrainingChunk], batch_size: int = 256) -> float:
    """Inference-mode BCE over every (chunk, class) pair."""
    scores = []
    targets = []
    for start in range(0, len(chunks), batch_size):
        x, y = stack_chunks(chunks[start : start + batch_size])
        scores.append(model.predict(x))
        targets.append(y)
    return bce_loss(np.concatenate(scores), np.concatenate(targets))


def _diagnose(model: SpottingModel, epoch: int, batch: int, loss: float) -> NumericError:
    norms = {name: float(np.linalg.norm(value)) for name, value in model.params.items()}
    worst = max(norms, key=lambda n: norms[n] if np.isfinite(norms[n]) else np.inf)
    return NumericError(
        f"non-finite training loss {loss} at epoch {epoch} batch {batch}; "
        f"largest parameter norm {worst}={norms[worst]}"
    )


def train(
    model: SpottingModel,
    train_chunks: list[TrainingChunk],
    val_chunks: list[TrainingChunk],
    cfg: TrainConfig | None = None,
    progress: bool = True,
) -> tuple[SpottingModel, TrainLog]:
    """
    Train ``model`` in place and return the lowest-validation-loss copy.

    Every epoch shuffles the training chunks with the seeded generator, which
    also draws the dropout masks, so a fixed seed reproduces the whole run.

    Args:
        model: Freshly created (or pre-trained) model
        train_chunks: Training samples
        val_chunks: Validation samples (scored with dropout off)
        cfg: Schedule and optimizer settings
        progress: Show a tqdm bar over epochs

    Returns:
        Tuple of (best model, per-epoch log)

    Raises:
        ShapeError: If either split is empty
        NumericError: On a non-finite training loss
    """
    cfg = cfg or TrainConfig()
    if not train_chunks or not val_chunks:
        raise ShapeError(
            f"training needs nonempty splits, got {len(train_chunks)} train / {len(val_chunks)} val chunks"
        )
    rng = np.random.default_rng(cfg.seed)
    optimizer = AdamOptimizer()
    scheduler = LRPlateauScheduler(cfg)
    log = TrainLog()
    best_params = {name: value.copy() for name, value in model.params.items()}
    best_val = float("inf")
    lr = cfg.initial_lr

    epochs = tqdm(range(1, cfg.max_epochs + 1), desc="train", unit="epoch", disable=not progress)
    for epoch in epochs:
        started = time.perf_counter()
        order = rng.permutation(len(train_chunks))
        total = 0.0
        for batch, start in enumerate(range(0, len(order), cfg.batch_size)):
            x, y = stack_chunks([train_chunks[i] for i in order[start : start + cfg.batch_size]])
            prediction, cache = model.forward(x, train_mode=True, rng=rng)
            loss = bce_loss(prediction, y)
            if not np.isfinite(loss):
                raise _diagnose(model, epoch, batch, loss)
            grads = model.backward(cache, y)
            model.set_params(optimizer.step(model.params, grads, lr=lr))
            total += loss * len(x)
        train_loss = total / len(order)
        val_loss = evaluate_loss(model, val_chunks, cfg.batch_size)
        if not np.isfinite(val_loss):
            raise _diagnose(model, epoch, -1, val_loss)

        log.records.append(
            EpochRecord(epoch, train_loss, val_loss, lr, time.perf_counter() - started)
        )
        if val_loss < best_val - IMPROVEMENT_TOL:
            best_val = val_loss
            best_params = {name: value.copy() for name, value in model.params.items()}
            log.best_epoch = epoch
        logger.debug("epoch=%d train_loss=%.5f val_loss=%.5f lr=%.1e", epoch, train_loss, val_loss, lr)
        epochs.set_postfix(train=f"{train_loss:.4f}", val=f"{val_loss:.4f}", lr=f"{lr:.0e}")

        lr, stop = scheduler.step(val_loss)
        if stop:
            log.stopped_early = True
            break

    logger.info(
        "training done epochs=%d best_epoch=%d best_val=%.5f", len(log.records), log.best_epoch, best_val
    )
    return SpottingModel(model.config, best_params), log


def write_train_log(log: TrainLog, path: str | Path, include_wall_time: bool = True) -> Path:
    """One JSON object per epoch, keys sorted."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [asdict(r) for r in log.records] if include_wall_time else log.deterministic_view()
    path.write_text("".join(json.dumps(row, sort_keys=True) + "\n" for row in rows))
    return path


def read_train_log(path: str | Path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
