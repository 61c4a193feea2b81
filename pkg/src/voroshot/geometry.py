"""Distance, influence and cell-assignment kernels.

Four partitions of feature space are supported:

* VD   -- nearest center under squared Euclidean distance,
* PD   -- nearest center after subtracting a per-center weight,
* CIVD -- cells owned by clusters, assignment by maximal influence,
* CCVD -- cluster-to-cluster influence with positional pairing.

Every ``assign_*`` function breaks ties toward the lowest class index.
Single-query functions take 1-d arrays; the ``*_many`` variants take a
``(Q, n)`` query matrix and return a ``(Q,)`` integer array.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "METRICS",
    "sq_dist",
    "distance",
    "pairwise_distances",
    "assign_vd",
    "assign_vd_many",
    "assign_pd",
    "assign_pd_many",
    "influence",
    "influence_from_distances",
    "assign_civd",
    "assign_civd_many",
    "influence_ccvd",
    "assign_ccvd",
    "ccvd_scores",
]

METRICS = ("sqeuclidean", "euclidean")


def _as_point(z) -> np.ndarray:
    p = np.asarray(z, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise DimensionError(f"expected a nonempty 1-d point, got shape {p.shape}")
    return p


def _as_matrix(c, name: str = "centers") -> np.ndarray:
    m = np.asarray(c, dtype=np.float64)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2:
        raise DimensionError(f"{name} must be a 2-d array, got shape {m.shape}")
    if m.shape[0] == 0:
        raise ValueError(f"{name} is empty")
    return m


def _check_metric(metric: str) -> None:
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def sq_dist(a, b) -> float:
    """Squared Euclidean distance between two points."""
    a = _as_point(a)
    b = _as_point(b)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    diff = a - b
    return float(np.dot(diff, diff))


def distance(a, b, metric: str = "sqeuclidean") -> float:
    _check_metric(metric)
    d = sq_dist(a, b)
    return d if metric == "sqeuclidean" else float(np.sqrt(d))


def pairwise_distances(queries, centers, metric: str = "sqeuclidean") -> np.ndarray:
    """Distance matrix of shape ``(Q, K)``.

    Computed from explicit differences rather than the ``|a|^2 - 2ab + |b|^2``
    expansion so that identical points give exactly zero.
    """
    _check_metric(metric)
    q = _as_matrix(queries, "queries")
    c = _as_matrix(centers)
    if q.shape[1] != c.shape[1]:
        raise DimensionError(
            f"dimension mismatch: queries have {q.shape[1]}, centers have {c.shape[1]}"
        )
    diff = q[:, None, :] - c[None, :, :]
    d = np.einsum("qkn,qkn->qk", diff, diff)
    if metric == "euclidean":
        d = np.sqrt(d)
    return d


def assign_vd(centers, z) -> int:
    z = _as_point(z)
    return int(assign_vd_many(centers, z[None, :])[0])


def assign_vd_many(centers, queries) -> np.ndarray:
    return np.argmin(pairwise_distances(queries, centers), axis=1)


def assign_pd(centers, weights, z) -> int:
    z = _as_point(z)
    return int(assign_pd_many(centers, weights, z[None, :])[0])


def assign_pd_many(centers, weights, queries) -> np.ndarray:
    c = _as_matrix(centers)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.shape[0] != c.shape[0]:
        raise ValueError(f"{w.shape[0]} weights for {c.shape[0]} centers")
    power = pairwise_distances(queries, c) - w[None, :]
    return np.argmin(power, axis=1)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if alpha == 0.0 or not np.isfinite(alpha):
        raise ValueError(f"influence exponent must be finite and nonzero, got {alpha}")
    return alpha


def influence_from_distances(dists, alpha: float = 1.0, axis: int = -1) -> np.ndarray:
    """``-sign(alpha) * sum(d ** alpha)`` reduced over ``axis``.

    Zero distances with a negative exponent are rejected instead of being
    clamped.
    """
    alpha = _check_alpha(alpha)
    d = np.asarray(dists, dtype=np.float64)
    if alpha < 0 and np.any(d == 0.0):
        raise DomainError("zero distance with negative influence exponent")
    if alpha == 1.0:
        powered = d
    else:
        powered = np.power(d, alpha)
    return -np.sign(alpha) * np.sum(powered, axis=axis)


def influence(cluster, z, alpha: float = 1.0, metric: str = "sqeuclidean") -> float:
    """Joint influence of ``cluster`` (rows are members) on the point ``z``."""
    z = _as_point(z)
    d = pairwise_distances(z[None, :], _as_matrix(cluster, "cluster"), metric)[0]
    return float(influence_from_distances(d, alpha))


def _stack_clusters(clusters) -> list[np.ndarray]:
    if len(clusters) == 0:
        raise ValueError("empty cluster list")
    mats = [_as_matrix(c, "cluster") for c in clusters]
    dim = mats[0].shape[1]
    for m in mats:
        if m.shape[1] != dim:
            raise DimensionError("clusters have different dimensions")
    return mats


def assign_civd_many(clusters, queries, alpha: float = 1.0,
                     metric: str = "sqeuclidean") -> np.ndarray:
    mats = _stack_clusters(clusters)
    scores = np.stack(
        [influence_from_distances(pairwise_distances(queries, m, metric), alpha)
         for m in mats],
        axis=1,
    )
    return np.argmax(scores, axis=1)


def assign_civd(clusters, z, alpha: float = 1.0, metric: str = "sqeuclidean") -> int:
    z = _as_point(z)
    return int(assign_civd_many(clusters, z[None, :], alpha, metric)[0])


def _positional_distances(cluster: Sequence, query_cluster: Sequence,
                          metric: str) -> np.ndarray:
    if len(cluster) != len(query_cluster):
        raise ValueError(
            f"cardinality mismatch: cluster has {len(cluster)} members, "
            f"query cluster has {len(query_cluster)}"
        )
    if len(cluster) == 0:
        raise ValueError("empty cluster")
    return np.array([distance(c, q, metric) for c, q in zip(cluster, query_cluster)])


def influence_ccvd(cluster: Sequence, query_cluster: Sequence, alpha: float = 1.0,
                   metric: str = "sqeuclidean") -> float:
    """Cluster-to-cluster influence; member ``i`` is paired with query member ``i``.

    Members are sequences of points rather than a matrix because position
    ``i`` may live in a different space from position ``j``.
    """
    return float(influence_from_distances(
        _positional_distances(cluster, query_cluster, metric), alpha))


def assign_ccvd(clusters: Sequence[Sequence], query_cluster: Sequence,
                alpha: float = 1.0, metric: str = "sqeuclidean") -> int:
    if len(clusters) == 0:
        raise ValueError("empty cluster list")
    scores = [influence_ccvd(c, query_cluster, alpha, metric) for c in clusters]
    return int(np.argmax(scores))


def ccvd_scores(member_distances, alpha: float = 1.0) -> np.ndarray:
    """Influence scores from stacked per-member distance matrices.

    ``member_distances`` has shape ``(L, Q, K)``: entry ``[i, q, k]`` is the
    distance between member ``i`` of class ``k`` and member ``i`` of query
    ``q``'s cluster. Returns ``(Q, K)`` scores; predictions are the row argmax.
    """
    d = np.asarray(member_distances, dtype=np.float64)
    if d.ndim != 3 or d.shape[0] == 0:
        raise ValueError(f"expected (L, Q, K) distances, got shape {d.shape}")
    return influence_from_distances(d, alpha, axis=0)
