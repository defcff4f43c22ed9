"""Pooling heads: VLAD, NetVLAD, NetRVLAD, Max, Avg and their temporally-aware variants."""

from .netvlad import (
    ClusterCache,
    hard_assign,
    netrvlad_forward,
    netvlad_backward,
    netvlad_forward_efficient,
    netvlad_forward_naive,
    soft_assign,
    vlad_forward,
)
from .reduce import reduce_backward, reduce_pool
from .temporal import PoolCache, pool_backward, pool_forward, pool_plusplus, temporal_split
from .types import (
    CLUSTER_KINDS,
    POOL_KINDS,
    ClusterParams,
    PoolOutput,
    PoolSpec,
    TemporalWindow,
    init_cluster_params,
)

__all__ = [
    "CLUSTER_KINDS",
    "POOL_KINDS",
    "ClusterCache",
    "ClusterParams",
    "PoolCache",
    "PoolOutput",
    "PoolSpec",
    "TemporalWindow",
    "hard_assign",
    "init_cluster_params",
    "netrvlad_forward",
    "netvlad_backward",
    "netvlad_forward_efficient",
    "netvlad_forward_naive",
    "pool_backward",
    "pool_forward",
    "pool_plusplus",
    "reduce_backward",
    "reduce_pool",
    "soft_assign",
    "temporal_split",
    "vlad_forward",
]
