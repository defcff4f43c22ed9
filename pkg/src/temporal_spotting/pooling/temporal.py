"""Temporally-aware ("++") pooling and the dispatcher the model uses.

A ++ head pools past and future frames with separate parameters and
concatenates the two descriptors: V = [V_before ‖ V_after].
"""

from dataclasses import dataclass
from typing import Any

import numpy as np

from ..errors import ShapeError
from ..numerics import l2_normalize, l2_normalize_backward
from .netvlad import (
    ClusterCache,
    as_batch,
    netrvlad_forward,
    netvlad_backward,
    netvlad_forward_efficient,
    vlad_forward,
)
from .reduce import reduce_backward, reduce_pool
from .types import ClusterParams, PoolOutput, PoolSpec, TemporalWindow

FEATURE_EPS = 1e-12


@dataclass
class PoolCache:
    """Intermediates of :func:`pool_forward`."""

    spec: PoolSpec
    x: np.ndarray  # B×N×D input, before feature normalization
    head_caches: list[Any]
    head_dims: list[int]
    indices: list[np.ndarray] | None
    pre_post_norm: np.ndarray | None
    batched: bool


def temporal_split(x, frame_rate: float, before_s: float, after_s: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Split temporally ordered frames into past and future context.

    Offsets are measured from the chunk center; the center frame belongs to
    the future half.

    Returns:
        Tuple of (past frames, future frames), each keeping the input's rank

    Raises:
        ShapeError: If either half is empty
    """
    arr = np.asarray(x, dtype=np.float64)
    window = TemporalWindow(frame_rate, before_s, after_s)
    before, after = window.split_indices(arr.shape[-2])
    return arr[..., before, :], arr[..., after, :]


def _head_forward(kind: str, x3: np.ndarray, params: ClusterParams | None) -> PoolOutput:
    if kind in ("max", "avg"):
        return reduce_pool(x3, kind)
    if params is None:
        raise ShapeError(f"'{kind}' pooling needs cluster parameters")
    if kind == "netvlad":
        return netvlad_forward_efficient(x3, params)
    if kind == "netrvlad":
        return netrvlad_forward(x3, params)
    return vlad_forward(x3, params)


def _head_backward(cache: Any, grad: np.ndarray) -> tuple[np.ndarray, ClusterParams | None]:
    if isinstance(cache, ClusterCache):
        return netvlad_backward(cache, grad)
    return reduce_backward(cache, grad), None


def pool_forward(
    x,
    spec: PoolSpec,
    params: tuple[ClusterParams, ...] = (),
    window: TemporalWindow | None = None,
) -> PoolOutput:
    """
    Pool a chunk (or batch of chunks) with any :class:`PoolSpec`.

    Args:
        x: N×D or B×N×D frame features in temporal order
        spec: Pooling kind and options
        params: One vocabulary, two (past, future) for ++ cluster heads, or none
        window: Temporal context used for the past/future split. Defaults to an
            even split around the middle frame.

    Returns:
        PoolOutput whose vector has length ``spec.output_dim(D)``
    """
    x3, batched = as_batch(x)
    expected_heads = len(spec.head_clusters())
    if len(params) != expected_heads:
        raise ShapeError(f"{spec.label} pooling needs {expected_heads} parameter set(s), got {len(params)}")

    feats = l2_normalize(x3, FEATURE_EPS, axis=-1) if spec.feature_norm else x3
    if spec.temporally_aware:
        half = x3.shape[1] / 2.0
        window = window or TemporalWindow(frame_rate=1.0, before_s=half, after_s=half)
        indices = list(window.split_indices(x3.shape[1]))
        parts = [feats[:, idx, :] for idx in indices]
    else:
        indices = None
        parts = [feats]

    heads = [
        _head_forward(spec.kind, part, params[i] if params else None) for i, part in enumerate(parts)
    ]
    vector = np.concatenate([h.vector for h in heads], axis=-1)
    pre_post = None
    if spec.post_norm:
        pre_post = vector
        vector = l2_normalize(vector, FEATURE_EPS, axis=-1)

    cache = PoolCache(
        spec=spec,
        x=x3,
        head_caches=[h.cache for h in heads],
        head_dims=[h.vector.shape[-1] for h in heads],
        indices=indices,
        pre_post_norm=pre_post,
        batched=batched,
    )
    return PoolOutput(vector=vector if batched else vector[0], cache=cache)


def pool_backward(cache: PoolCache, upstream_grad) -> tuple[np.ndarray, tuple[ClusterParams, ...]]:
    """
    Backward pass of :func:`pool_forward`.

    Returns:
        Tuple of (grad w.r.t. input frames, per-head parameter grads)
    """
    grad = np.asarray(upstream_grad, dtype=np.float64)
    batch = cache.x.shape[0]
    total = sum(cache.head_dims)
    expected = (batch, total) if cache.batched else (total,)
    if grad.shape != expected:
        raise ShapeError(f"upstream gradient shape {grad.shape} does not match output {expected}")
    grad = grad.reshape(batch, total)
    if cache.pre_post_norm is not None:
        grad = l2_normalize_backward(cache.pre_post_norm, grad, FEATURE_EPS, axis=-1)

    grad_feats = np.zeros_like(cache.x)
    param_grads = []
    offset = 0
    for i, (head_cache, width) in enumerate(zip(cache.head_caches, cache.head_dims, strict=True)):
        head_grad_x, head_grad_params = _head_backward(head_cache, grad[:, offset : offset + width])
        offset += width
        if cache.indices is None:
            grad_feats += head_grad_x
        else:
            grad_feats[:, cache.indices[i], :] += head_grad_x
        if head_grad_params is not None:
            param_grads.append(head_grad_params)

    if cache.spec.feature_norm:
        grad_x = l2_normalize_backward(cache.x, grad_feats, FEATURE_EPS, axis=-1)
    else:
        grad_x = grad_feats
    return (grad_x if cache.batched else grad_x[0]), tuple(param_grads)


def pool_plusplus(
    x,
    spec: PoolSpec,
    params_before: ClusterParams | None,
    params_after: ClusterParams | None,
    window: TemporalWindow | None = None,
) -> PoolOutput:
    """
    Temporally-aware pooling: separate heads for past and future frames.

    Each half's frames are L2-normalized along the feature dimension first
    (when ``spec.feature_norm``), then pooled and concatenated as
    [V_before ‖ V_after].

    Raises:
        ValueError: If ``spec`` is not temporally aware
    """
    if not spec.temporally_aware:
        raise ValueError("pool_plusplus needs a temporally-aware PoolSpec")
    params = (params_before, params_after) if spec.uses_clusters else ()
    return pool_forward(x, spec, params, window)
