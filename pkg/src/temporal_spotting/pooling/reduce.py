"""Max and average pooling over the frame axis."""

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from .netvlad import as_batch
from .types import PoolOutput

REDUCE_MODES = ("max", "avg")


@dataclass
class ReduceCache:
    mode: str
    shape: tuple[int, int, int]
    argmax: np.ndarray | None
    batched: bool


def reduce_pool(x, mode: str) -> PoolOutput:
    """
    Column-wise max or mean over frames.

    Max ties resolve to the earliest frame, which is also where the backward
    pass routes the gradient.

    Raises:
        ShapeError: If there are no frames
        ValueError: If ``mode`` is not 'max' or 'avg'
    """
    if mode not in REDUCE_MODES:
        raise ValueError(f"Unknown reduce mode '{mode}'. Valid modes: {', '.join(REDUCE_MODES)}")
    x3, batched = as_batch(x)
    if x3.shape[1] == 0:
        raise ShapeError("reduce pooling needs at least one frame (N = 0)")

    argmax = None
    if mode == "max":
        argmax = x3.argmax(axis=1)
        out = np.take_along_axis(x3, argmax[:, None, :], axis=1)[:, 0, :]
    else:
        out = x3.mean(axis=1)
    cache = ReduceCache(mode, x3.shape, argmax, batched)
    return PoolOutput(vector=out if batched else out[0], cache=cache)


def reduce_backward(cache: ReduceCache, upstream_grad) -> np.ndarray:
    """Gradient w.r.t. the pooled frames."""
    batch, frames, dim = cache.shape
    grad = np.asarray(upstream_grad, dtype=np.float64)
    expected = (batch, dim) if cache.batched else (dim,)
    if grad.shape != expected:
        raise ShapeError(f"upstream gradient shape {grad.shape} does not match output {expected}")
    grad = grad.reshape(batch, dim)

    if cache.mode == "max":
        grad_x = np.zeros(cache.shape)
        np.put_along_axis(grad_x, cache.argmax[:, None, :], grad[:, None, :], axis=1)
    else:
        grad_x = np.broadcast_to(grad[:, None, :] / frames, cache.shape).copy()
    return grad_x if cache.batched else grad_x[0]
