"""The spotting network: linear projection → pooling → dropout → sigmoid classifier.

Parameters live in one ordered ``dict[str, np.ndarray]`` so the optimizer,
the checkpoint writer and the gradient checker can treat them uniformly.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, StaleCacheError
from .numerics import as_float_array, sigmoid
from .pooling import (
    ClusterParams,
    PoolCache,
    PoolSpec,
    TemporalWindow,
    init_cluster_params,
    pool_backward,
    pool_forward,
)

PRED_CLAMP = 1e-7
BACKGROUND_LABEL = "__background__"


@dataclass(frozen=True)
class ModelConfig:
    """
    Architecture of a :class:`SpottingModel`.

    ``num_classes`` counts every classifier output, including the trailing
    background unit.
    """

    input_dim: int = 2048
    reduced_dim: int = 512
    pool: PoolSpec = field(default_factory=PoolSpec)
    num_classes: int = 18
    dropout: float = 0.4
    window: TemporalWindow = field(default_factory=TemporalWindow)
    use_projection: bool = True
    class_names: tuple[str, ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.num_classes < 1:
            raise ValueError("num_classes must be at least 1")
        if not self.use_projection and self.reduced_dim != self.input_dim:
            object.__setattr__(self, "reduced_dim", self.input_dim)
        if self.class_names and len(self.class_names) != self.num_classes:
            raise ValueError(
                f"{len(self.class_names)} class names given for {self.num_classes} outputs"
            )

    @property
    def feature_dim(self) -> int:
        """Dimension of the frames entering the pooling head."""
        return self.reduced_dim if self.use_projection else self.input_dim

    @property
    def pooled_dim(self) -> int:
        return self.pool.output_dim(self.feature_dim)

    @property
    def head_names(self) -> tuple[str, ...]:
        if not self.pool.uses_clusters:
            return ()
        return ("before", "after") if self.pool.temporally_aware else ("main",)


@dataclass
class ChunkPrediction:
    """Independent per-class sigmoid scores (multi-label, not a distribution)."""

    scores: np.ndarray


@dataclass
class ForwardCache:
    x: np.ndarray
    z: np.ndarray
    pool_cache: PoolCache
    mask: np.ndarray | None
    hidden: np.ndarray
    probs: np.ndarray
    version: int
    batched: bool


def bce_loss(pred, target) -> float:
    """
    Multi-label binary cross-entropy, averaged over every (sample, class) pair.

    Predictions are clamped to [1e-7, 1 - 1e-7] first.

    Raises:
        ShapeError: If shapes differ
    """
    scores = pred.scores if isinstance(pred, ChunkPrediction) else np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if scores.shape != target.shape:
        raise ShapeError(f"prediction shape {scores.shape} does not match target {target.shape}")
    p = np.clip(scores, PRED_CLAMP, 1.0 - PRED_CLAMP)
    return float(-(target * np.log(p) + (1.0 - target) * np.log(1.0 - p)).mean())


class SpottingModel:
    """Projection, one or two pooling heads and a single-layer sigmoid classifier."""

    def __init__(self, config: ModelConfig, params: dict[str, np.ndarray]) -> None:
        self.config = config
        self.version = 0
        self.params: dict[str, np.ndarray] = {}
        self.set_params(params)

    @classmethod
    def create(cls, config: ModelConfig, rng: np.random.Generator | None = None) -> "SpottingModel":
        """
        Fresh model: projection ~ U(-1/√D_in, 1/√D_in), pooling per its own
        initializer, classifier all zeros (every score starts at 0.5).
        """
        rng = rng or np.random.default_rng(config.seed)
        params: dict[str, np.ndarray] = {}
        if config.use_projection:
            bound = 1.0 / math.sqrt(config.input_dim)
            params["projection.weight"] = rng.uniform(
                -bound, bound, size=(config.input_dim, config.reduced_dim)
            )
            params["projection.bias"] = np.zeros(config.reduced_dim)
        for head, clusters in zip(config.head_names, config.pool.head_clusters(), strict=True):
            vocab = init_cluster_params(rng, clusters, config.feature_dim, config.pool.kind)
            for key, value in vocab.arrays().items():
                params[f"pool.{head}.{key}"] = value
        params["classifier.weight"] = np.zeros((config.pooled_dim, config.num_classes))
        params["classifier.bias"] = np.zeros(config.num_classes)
        return cls(config, params)

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        """Replace every parameter; invalidates caches from earlier forwards."""
        expected = self.expected_shapes()
        if set(params) != set(expected):
            missing = sorted(set(expected) - set(params))
            unknown = sorted(set(params) - set(expected))
            raise ShapeError(f"parameter names mismatch: missing {missing}, unknown {unknown}")
        for name, shape in expected.items():
            if np.shape(params[name]) != shape:
                raise ShapeError(f"parameter {name} has shape {np.shape(params[name])}, expected {shape}")
        self.params = {name: as_float_array(params[name], name) for name in expected}
        self.version += 1

    def expected_shapes(self) -> dict[str, tuple[int, ...]]:
        """Parameter name → shape, in canonical order."""
        cfg = self.config
        shapes: dict[str, tuple[int, ...]] = {}
        if cfg.use_projection:
            shapes["projection.weight"] = (cfg.input_dim, cfg.reduced_dim)
            shapes["projection.bias"] = (cfg.reduced_dim,)
        kind = cfg.pool.kind
        for head, clusters in zip(cfg.head_names, cfg.pool.head_clusters(), strict=True):
            if kind in ("netvlad", "netrvlad"):
                shapes[f"pool.{head}.w"] = (clusters, cfg.feature_dim)
                shapes[f"pool.{head}.b"] = (clusters,)
            if kind in ("netvlad", "vlad"):
                shapes[f"pool.{head}.c"] = (clusters, cfg.feature_dim)
        shapes["classifier.weight"] = (cfg.pooled_dim, cfg.num_classes)
        shapes["classifier.bias"] = (cfg.num_classes,)
        return shapes

    def pool_params(self) -> tuple[ClusterParams, ...]:
        out = []
        for head in self.config.head_names:
            arrays = {key: self.params.get(f"pool.{head}.{key}") for key in ("w", "b", "c")}
            out.append(ClusterParams(**arrays))
        return tuple(out)

    def project(self, x_raw) -> np.ndarray:
        """
        Affine per-frame map D_in → D_red (identity when the projection is disabled).

        Raises:
            ShapeError: If the feature dimension does not match the model
        """
        x = as_float_array(x_raw, "frames")
        if x.shape[-1] != self.config.input_dim:
            raise ShapeError(f"frames have dim {x.shape[-1]}, model expects {self.config.input_dim}")
        if not self.config.use_projection:
            return x
        return x @ self.params["projection.weight"] + self.params["projection.bias"]

    def forward(
        self, chunk, train_mode: bool = False, rng: np.random.Generator | None = None
    ) -> tuple[ChunkPrediction, ForwardCache]:
        """
        Score one chunk (N×D_in) or a batch (B×N×D_in).

        Dropout is only active in ``train_mode`` and uses inverted scaling.

        Raises:
            ShapeError: If the chunk does not span the configured window
        """
        x = as_float_array(chunk, "chunk")
        batched = x.ndim == 3
        if x.ndim not in (2, 3):
            raise ShapeError(f"chunk must be N×D or B×N×D, got shape {x.shape}")
        x3 = x if batched else x[None]
        frames = self.config.window.frames
        if x3.shape[1] != frames:
            raise ShapeError(f"chunk has {x3.shape[1]} frames, window needs {frames}")

        z = self.project(x3)
        pooled = pool_forward(z, self.config.pool, self.pool_params(), self.config.window)
        hidden = pooled.vector
        mask = None
        if train_mode and self.config.dropout > 0.0:
            if rng is None:
                raise ValueError("train_mode forward needs an rng for dropout")
            keep = 1.0 - self.config.dropout
            mask = (rng.random(hidden.shape) < keep) / keep
            hidden = hidden * mask
        logits = hidden @ self.params["classifier.weight"] + self.params["classifier.bias"]
        probs = sigmoid(logits)

        cache = ForwardCache(x3, z, pooled.cache, mask, hidden, probs, self.version, batched)
        return ChunkPrediction(probs if batched else probs[0]), cache

    def predict(self, chunks) -> np.ndarray:
        """Inference-mode scores for a batch, B×C."""
        prediction, _ = self.forward(chunks, train_mode=False)
        return prediction.scores

    def backward(self, cache: ForwardCache, target) -> dict[str, np.ndarray]:
        """
        Gradient of :func:`bce_loss` w.r.t. every parameter, reusing the
        forward dropout mask.

        Raises:
            StaleCacheError: If parameters changed since the forward pass
            ShapeError: If the target does not match the prediction
        """
        if cache.version != self.version:
            raise StaleCacheError(
                f"cache from model version {cache.version}, model is at {self.version}"
            )
        target = np.asarray(target, dtype=np.float64)
        target = target if cache.batched else target[None]
        if target.shape != cache.probs.shape:
            raise ShapeError(f"target shape {target.shape} does not match prediction {cache.probs.shape}")

        p = cache.probs
        unclamped = (p > PRED_CLAMP) & (p < 1.0 - PRED_CLAMP)
        d_logits = (p - target) * unclamped / target.size

        grads: dict[str, np.ndarray] = {}
        grads["classifier.weight"] = cache.hidden.T @ d_logits
        grads["classifier.bias"] = d_logits.sum(axis=0)
        d_hidden = d_logits @ self.params["classifier.weight"].T
        if cache.mask is not None:
            d_hidden = d_hidden * cache.mask

        d_z, pool_grads = pool_backward(cache.pool_cache, d_hidden)
        for head, head_grads in zip(self.config.head_names, pool_grads, strict=True):
            for key, value in head_grads.arrays().items():
                grads[f"pool.{head}.{key}"] = value

        if self.config.use_projection:
            grads["projection.weight"] = np.einsum("bni,bnj->ij", cache.x, d_z)
            grads["projection.bias"] = d_z.sum(axis=(0, 1))
        return {name: grads[name] for name in self.params}

    def param_count(self) -> dict[str, int]:
        return param_count(self.config)


def param_count(model: "SpottingModel | ModelConfig") -> dict[str, int]:
    """
    Exact learnable-parameter counts per component.

    Returns:
        Dict with projection, pooling, classifier, head (pooling + classifier)
        and total counts
    """
    cfg = model.config if isinstance(model, SpottingModel) else model
    projection = (cfg.input_dim + 1) * cfg.reduced_dim if cfg.use_projection else 0
    pooling = cfg.pool.param_count(cfg.feature_dim)
    classifier = (cfg.pooled_dim + 1) * cfg.num_classes
    return {
        "projection": projection,
        "pooling": pooling,
        "classifier": classifier,
        "head": pooling + classifier,
        "total": projection + pooling + classifier,
    }
