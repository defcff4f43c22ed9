"""VLAD-family pooling: hard VLAD, NetVLAD (naive and efficient) and NetRVLAD.

All kernels accept one chunk (N×D) or a batch (B×N×D) and share one
normalization chain: intra-cluster L2 over the feature dimension, flatten,
global L2.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError, ShapeError
from ..numerics import as_float_array, l2_normalize, l2_normalize_backward, softmax, softmax_backward
from .types import ClusterParams, PoolOutput

NORM_EPS = 1e-12


@dataclass
class ClusterCache:
    """Intermediates of a cluster pooling forward pass."""

    kind: str
    x: np.ndarray  # B×N×D
    assign: np.ndarray  # B×N×K
    raw: np.ndarray  # B×K×D
    params: ClusterParams
    batched: bool


def as_batch(x, name: str = "features") -> tuple[np.ndarray, bool]:
    """Promote N×D to 1×N×D; return the array and whether the input was batched."""
    arr = as_float_array(x, name)
    if arr.ndim == 2:
        return arr[None], False
    if arr.ndim == 3:
        return arr, True
    raise ShapeError(f"{name} must be N×D or B×N×D, got shape {arr.shape}")


def _check(x: np.ndarray, params: ClusterParams) -> None:
    if params.clusters == 0:
        raise ShapeError("pooling needs at least one cluster (K = 0)")
    if x.shape[1] == 0:
        raise ShapeError("pooling needs at least one frame (N = 0)")
    if x.shape[2] != params.dim:
        raise ShapeError(f"feature dim {x.shape[2]} does not match cluster dim {params.dim}")


def _normalize_chain(raw: np.ndarray) -> np.ndarray:
    intra = l2_normalize(raw, NORM_EPS, axis=-1)
    return l2_normalize(intra.reshape(raw.shape[0], -1), NORM_EPS, axis=-1)


def _finish(kind: str, x, assign, raw, params, batched) -> PoolOutput:
    vector = _normalize_chain(raw)
    cache = ClusterCache(kind, x, assign, raw, params, batched)
    return PoolOutput(vector=vector if batched else vector[0], cache=cache)


def soft_assign(x, params: ClusterParams) -> np.ndarray:
    """
    Soft assignment of every frame to every cluster.

    Row i is softmax_k(w_k · x_i + b_k).

    Args:
        x: N×D (or B×N×D) features
        params: Vocabulary with assignment weights

    Returns:
        N×K (or B×N×K) matrix with rows summing to one
    """
    x3, batched = as_batch(x)
    if params.w is None:
        raise ShapeError("soft assignment needs assignment weights w and biases b")
    _check(x3, params)
    assign = softmax(x3 @ params.w.T + params.b, axis=-1)
    return assign if batched else assign[0]


def hard_assign(x, centers: np.ndarray) -> np.ndarray:
    """One-hot nearest-center assignment; ties go to the lowest cluster index."""
    x3, batched = as_batch(x)
    dist = (
        (x3 * x3).sum(-1, keepdims=True)
        - 2.0 * x3 @ centers.T
        + (centers * centers).sum(-1)
    )
    nearest = dist.argmin(axis=-1)
    assign = np.zeros(dist.shape)
    np.put_along_axis(assign, nearest[..., None], 1.0, axis=-1)
    return assign if batched else assign[0]


def vlad_forward(x, centers) -> PoolOutput:
    """
    Hard-assignment VLAD.

    V(j,k) = Σ_i a_k(x_i)(x_i(j) − c_k(j)) with a_k one-hot on the nearest center.
    ``PoolOutput.raw`` keeps the K×D descriptor before normalization.
    """
    params = centers if isinstance(centers, ClusterParams) else ClusterParams(c=as_float_array(centers, "centers"))
    if params.c is None:
        raise ShapeError("VLAD needs cluster centers")
    x3, batched = as_batch(x)
    _check(x3, params)
    assign = hard_assign(x3, params.c)
    raw = assign.transpose(0, 2, 1) @ x3 - assign.sum(1)[..., None] * params.c
    return _finish("vlad", x3, assign, raw, params, batched)


def netvlad_forward_naive(x, params: ClusterParams) -> PoolOutput:
    """
    NetVLAD through the literal B×N×K×D residual tensor.

    Reference path for testing and benchmarking; prefer
    :func:`netvlad_forward_efficient`.
    """
    if params.c is None:
        raise ShapeError("NetVLAD needs cluster centers; use netrvlad_forward without them")
    x3, batched = as_batch(x)
    _check(x3, params)
    assign = softmax(x3 @ params.w.T + params.b, axis=-1)
    residual = x3[:, :, None, :] - params.c[None, None, :, :]
    raw = (assign[..., None] * residual).sum(axis=1)
    return _finish("netvlad", x3, assign, raw, params, batched)


def netvlad_forward_efficient(x, params: ClusterParams) -> PoolOutput:
    """
    NetVLAD as two matrix products.

    V(j,k) = Σ_i ã_k(x_i) x_i(j) − (Σ_i ã_k(x_i)) c_k(j); no N×K×D intermediate.
    """
    if params.c is None:
        raise ShapeError("NetVLAD needs cluster centers; use netrvlad_forward without them")
    x3, batched = as_batch(x)
    _check(x3, params)
    assign = softmax(x3 @ params.w.T + params.b, axis=-1)
    raw = assign.transpose(0, 2, 1) @ x3 - assign.sum(axis=1)[..., None] * params.c
    return _finish("netvlad", x3, assign, raw, params, batched)


def netrvlad_forward(x, params: ClusterParams) -> PoolOutput:
    """Residual-less NetVLAD: V(j,k) = Σ_i ã_k(x_i) x_i(j). Centers, if present, are ignored."""
    if params.w is None:
        raise ShapeError("NetRVLAD needs assignment weights w and biases b")
    x3, batched = as_batch(x)
    _check(x3, params)
    assign = softmax(x3 @ params.w.T + params.b, axis=-1)
    raw = assign.transpose(0, 2, 1) @ x3
    return _finish("netrvlad", x3, assign, raw, ClusterParams(w=params.w, b=params.b), batched)


def netvlad_backward(cache: ClusterCache, upstream_grad) -> tuple[np.ndarray, ClusterParams]:
    """
    Exact gradients through assignment, aggregation and both L2 normalizations.

    Works for every :class:`ClusterCache` (NetVLAD, NetRVLAD, and VLAD, whose
    hard assignments are held fixed).

    Args:
        cache: From the matching forward call
        upstream_grad: dLoss/dOutput, shaped like the forward output

    Returns:
        Tuple of (grad w.r.t. features, grads as ClusterParams)

    Raises:
        ShapeError: If the gradient does not match the cached output
    """
    if not isinstance(cache, ClusterCache):
        raise ShapeError(f"expected a cluster pooling cache, got {type(cache).__name__}")
    grad = np.asarray(upstream_grad, dtype=np.float64)
    x, assign, raw, params = cache.x, cache.assign, cache.raw, cache.params
    batch, _, dim = x.shape
    clusters = raw.shape[1]
    expected = (batch, clusters * dim) if cache.batched else (clusters * dim,)
    if grad.shape != expected:
        raise ShapeError(f"upstream gradient shape {grad.shape} does not match output {expected}")
    if not np.all(np.isfinite(grad)):
        raise NumericError("upstream gradient contains NaN or Inf")
    grad = grad.reshape(batch, clusters * dim)

    intra = l2_normalize(raw, NORM_EPS, axis=-1)
    d_flat = l2_normalize_backward(intra.reshape(batch, -1), grad, NORM_EPS, axis=-1)
    d_raw = l2_normalize_backward(raw, d_flat.reshape(batch, clusters, dim), NORM_EPS, axis=-1)

    grad_x = assign @ d_raw
    grad_c = None
    if params.c is not None:
        grad_c = -(assign.sum(axis=1)[..., None] * d_raw).sum(axis=0)

    grad_w = grad_b = None
    if params.w is not None:
        d_assign = x @ d_raw.transpose(0, 2, 1)
        if params.c is not None:
            d_assign = d_assign - np.einsum("bkd,kd->bk", d_raw, params.c)[:, None, :]
        d_logits = softmax_backward(assign, d_assign)
        grad_w = np.einsum("bnk,bnd->kd", d_logits, x)
        grad_b = d_logits.sum(axis=(0, 1))
        grad_x = grad_x + d_logits @ params.w

    grads = ClusterParams(w=grad_w, b=grad_b, c=grad_c)
    return (grad_x if cache.batched else grad_x[0]), grads
