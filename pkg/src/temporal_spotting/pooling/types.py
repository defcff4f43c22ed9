"""Shared pooling types: specs, cluster vocabularies, outputs and temporal windows."""

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import ShapeError

POOL_KINDS = ("max", "avg", "netvlad", "netrvlad", "vlad")
CLUSTER_KINDS = ("netvlad", "netrvlad", "vlad")


@dataclass(frozen=True)
class PoolSpec:
    """
    Which pooling head to build and how to size it.

    ``clusters_before``/``clusters_after`` only matter for temporally-aware
    cluster heads; they default to an even split of ``clusters``.
    """

    kind: str = "netvlad"
    temporally_aware: bool = True
    clusters: int = 64
    clusters_before: int | None = None
    clusters_after: int | None = None
    feature_norm: bool = True
    post_norm: bool = False

    def __post_init__(self) -> None:
        if self.kind not in POOL_KINDS:
            raise ValueError(f"Unknown pooling kind '{self.kind}'. Valid kinds: {', '.join(POOL_KINDS)}")
        if not self.uses_clusters:
            return
        if self.clusters < 1:
            raise ValueError("clusters must be at least 1")
        if not self.temporally_aware:
            return
        before = self.clusters_before if self.clusters_before is not None else self.clusters // 2
        after = self.clusters_after if self.clusters_after is not None else self.clusters - before
        if before < 1 or after < 1:
            raise ValueError(f"temporally-aware pooling needs >= 2 clusters, got {self.clusters}")
        if before + after != self.clusters:
            raise ValueError(
                f"clusters_before + clusters_after must equal clusters ({before} + {after} != {self.clusters})"
            )
        object.__setattr__(self, "clusters_before", before)
        object.__setattr__(self, "clusters_after", after)

    @property
    def uses_clusters(self) -> bool:
        return self.kind in CLUSTER_KINDS

    @property
    def label(self) -> str:
        """Short name such as ``netvlad++`` or ``max``."""
        return self.kind + ("++" if self.temporally_aware else "")

    @classmethod
    def from_label(cls, label: str, **kwargs: Any) -> "PoolSpec":
        """Build a spec from a label like ``avg++``; extra fields go through ``kwargs``."""
        temporal = label.endswith("++")
        return cls(kind=label.removesuffix("++"), temporally_aware=temporal, **kwargs)

    def head_clusters(self) -> tuple[int, ...]:
        """Cluster count of each pooling head (one or two); empty for max/avg."""
        if not self.uses_clusters:
            return ()
        if self.temporally_aware:
            return (self.clusters_before, self.clusters_after)
        return (self.clusters,)

    def output_dim(self, dim: int) -> int:
        """Length of the pooled descriptor for ``dim``-dimensional frame features."""
        if self.uses_clusters:
            return sum(self.head_clusters()) * dim
        return dim * (2 if self.temporally_aware else 1)

    def param_count(self, dim: int) -> int:
        """Number of learnable pooling parameters for ``dim``-dimensional features."""
        per_cluster = {"netvlad": 2 * dim + 1, "netrvlad": dim + 1, "vlad": dim}.get(self.kind, 0)
        return per_cluster * sum(self.head_clusters())


@dataclass(frozen=True, eq=False)
class ClusterParams:
    """
    A pooling vocabulary: assignment weights ``w`` (K×D), biases ``b`` (K) and
    centers ``c`` (K×D).

    NetRVLAD leaves ``c`` unset; hard-assignment VLAD only carries ``c``.
    The same type holds gradients.
    """

    w: np.ndarray | None = None
    b: np.ndarray | None = None
    c: np.ndarray | None = None

    def __post_init__(self) -> None:
        if (self.w is None) != (self.b is None):
            raise ShapeError("assignment weights and biases must be given together")
        if self.w is None and self.c is None:
            raise ShapeError("cluster params need assignment weights or centers")
        if self.w is not None:
            if self.w.ndim != 2 or self.b.shape != (self.w.shape[0],):
                raise ShapeError(f"w must be K×D and b length K, got {self.w.shape} and {self.b.shape}")
            if self.c is not None and self.c.shape != self.w.shape:
                raise ShapeError(f"w {self.w.shape} and c {self.c.shape} must share shape")
        elif self.c.ndim != 2:
            raise ShapeError(f"centers must be K×D, got {self.c.shape}")

    @property
    def clusters(self) -> int:
        return (self.w if self.w is not None else self.c).shape[0]

    @property
    def dim(self) -> int:
        return (self.w if self.w is not None else self.c).shape[1]

    def arrays(self) -> dict[str, np.ndarray]:
        """Named arrays that are present, in w/b/c order."""
        return {k: v for k, v in (("w", self.w), ("b", self.b), ("c", self.c)) if v is not None}


def init_cluster_params(rng: np.random.Generator, clusters: int, dim: int, kind: str) -> ClusterParams:
    """
    Seeded initialization: w, c ~ U(-1/√D, 1/√D), b = 0.

    Args:
        rng: Source of randomness (w drawn before c)
        clusters: K
        dim: D
        kind: One of the cluster pooling kinds

    Returns:
        ClusterParams with the arrays ``kind`` uses
    """
    if kind not in CLUSTER_KINDS:
        raise ValueError(f"'{kind}' pooling has no cluster parameters")
    bound = 1.0 / math.sqrt(dim)
    w = b = c = None
    if kind in ("netvlad", "netrvlad"):
        w = rng.uniform(-bound, bound, size=(clusters, dim))
        b = np.zeros(clusters)
    if kind in ("netvlad", "vlad"):
        c = rng.uniform(-bound, bound, size=(clusters, dim))
    return ClusterParams(w=w, b=b, c=c)


@dataclass
class PoolOutput:
    """Pooled descriptor plus whatever the matching backward pass needs."""

    vector: np.ndarray
    cache: Any = field(repr=False, default=None)

    @property
    def raw(self) -> np.ndarray | None:
        """Un-normalized K×D descriptor for cluster pooling, else None."""
        raw = getattr(self.cache, "raw", None)
        if raw is None:
            return None
        return raw if self.cache.batched else raw[0]


@dataclass(frozen=True)
class TemporalWindow:
    """
    Context around a chunk center: ``before_s`` seconds of past and
    ``after_s`` seconds of future at ``frame_rate`` frames per second.

    Past frames have offsets in [-before_s, 0); future frames in [0, after_s].
    """

    frame_rate: float = 2.0
    before_s: float = 7.5
    after_s: float = 7.5

    def __post_init__(self) -> None:
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be positive")
        if self.before_s < 0 or self.after_s < 0 or self.before_s + self.after_s <= 0:
            raise ValueError("window must span a positive duration")

    @property
    def duration_s(self) -> float:
        return self.before_s + self.after_s

    @property
    def frames(self) -> int:
        """Frames in a full window (T · frame_rate)."""
        return int(round(self.duration_s * self.frame_rate))

    def center_index(self, n_frames: int) -> int:
        """Index of the offset-0 frame within an ``n_frames`` chunk."""
        return int(math.floor(n_frames * self.before_s / self.duration_s + 1e-9))

    def split_indices(self, n_frames: int) -> tuple[np.ndarray, np.ndarray]:
        """
        Indices of past and future frames within an ``n_frames`` chunk.

        Raises:
            ShapeError: If either half comes out empty
        """
        offsets = (np.arange(n_frames) - self.center_index(n_frames)) / self.frame_rate
        tol = 1e-9
        before = np.flatnonzero((offsets >= -self.before_s - tol) & (offsets < 0))
        after = np.flatnonzero((offsets >= 0) & (offsets <= self.after_s + tol))
        if before.size == 0 or after.size == 0:
            raise ShapeError(
                f"temporal split of {n_frames} frames at {self.frame_rate} fps leaves an empty half "
                f"(before={before.size}, after={after.size})"
            )
        return before, after
