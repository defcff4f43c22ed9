"""Naive vs efficient NetVLAD: wall time and peak transient allocation."""

import logging
import time
import tracemalloc
from collections.abc import Callable
from dataclasses import asdict, dataclass

import numpy as np

from .pooling import init_cluster_params, netvlad_forward_efficient, netvlad_forward_naive

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BenchRecord:
    frames: int
    clusters: int
    dim: int
    batch: int
    micro_batch: int
    repeats: int
    naive_s: float
    efficient_s: float
    naive_peak_bytes: int
    efficient_peak_bytes: int

    @property
    def speedup(self) -> float:
        return self.naive_s / self.efficient_s if self.efficient_s > 0 else float("inf")

    @property
    def memory_ratio(self) -> float:
        return self.naive_peak_bytes / max(self.efficient_peak_bytes, 1)

    def to_dict(self) -> dict:
        return {**asdict(self), "speedup": self.speedup, "memory_ratio": self.memory_ratio}


def _run(kernel: Callable, x: np.ndarray, params, micro_batch: int) -> None:
    for start in range(0, x.shape[0], micro_batch):
        kernel(x[start : start + micro_batch], params)


def _time(kernel: Callable, x: np.ndarray, params, micro_batch: int, repeats: int) -> float:
    """Best of ``repeats`` full passes."""
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        _run(kernel, x, params, micro_batch)
        best = min(best, time.perf_counter() - started)
    return best


def _peak(kernel: Callable, x: np.ndarray, params, micro_batch: int) -> int:
    tracemalloc.start()
    try:
        _run(kernel, x, params, micro_batch)
        return tracemalloc.get_traced_memory()[1]
    finally:
        tracemalloc.stop()


def bench_pool(
    frames: int = 30,
    clusters: int = 64,
    dim: int = 512,
    batch: int = 256,
    micro_batch: int = 16,
    repeats: int = 3,
    seed: int = 0,
) -> BenchRecord:
    """
    Time both NetVLAD kernels on the same random batch.

    The batch is fed in ``micro_batch`` slices to both kernels; a full
    256×30×64×512 residual tensor would need 2 GB at once.

    Returns:
        Timings (best of ``repeats``) and tracemalloc peaks per kernel
    """
    if min(frames, clusters, dim, batch, micro_batch, repeats) < 1:
        raise ValueError("every benchmark size must be positive")
    rng = np.random.default_rng(seed)
    params = init_cluster_params(rng, clusters, dim, "netvlad")
    x = rng.normal(size=(batch, frames, dim))

    # warm-up so first-call allocation does not count against either path
    _run(netvlad_forward_efficient, x[:micro_batch], params, micro_batch)
    naive_s = _time(netvlad_forward_naive, x, params, micro_batch, repeats)
    efficient_s = _time(netvlad_forward_efficient, x, params, micro_batch, repeats)
    record = BenchRecord(
        frames=frames,
        clusters=clusters,
        dim=dim,
        batch=batch,
        micro_batch=micro_batch,
        repeats=repeats,
        naive_s=naive_s,
        efficient_s=efficient_s,
        naive_peak_bytes=_peak(netvlad_forward_naive, x, params, micro_batch),
        efficient_peak_bytes=_peak(netvlad_forward_efficient, x, params, micro_batch),
    )
    logger.info(
        "bench_pool N=%d K=%d D=%d batch=%d speedup=%.2f memory_ratio=%.2f",
        frames,
        clusters,
        dim,
        batch,
        record.speedup,
        record.memory_ratio,
    )
    return record
