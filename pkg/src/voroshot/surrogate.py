"""Surrogate representation over base classes.

A point is re-expressed as its vector of squared distances to a handful of
base-class prototypes (the union of each novel prototype's top-R nearest
base prototypes). The final per-class criterion mixes the feature-space
distances and the surrogate-space distances after L1 normalisation; the
prediction is its argmin.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import transforms
from .data.bank import FeatureBank
from .episode import Episode
from .errors import DomainError
from .geometry import METRICS, pairwise_distances
from .transforms import TransformParams

__all__ = [
    "BasePrototypes",
    "SurrogateParams",
    "BasePrototypeCache",
    "base_prototypes",
    "select_surrogates",
    "surrogate_repr",
    "combined_criterion",
    "surrogate_criterion",
    "classify_surrogate",
]


@dataclass(frozen=True)
class BasePrototypes:
    centers: np.ndarray
    class_ids: tuple

    def __len__(self) -> int:
        return self.centers.shape[0]


@dataclass(frozen=True)
class SurrogateParams:
    R: int = 1
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if int(self.R) != self.R or self.R < 1:
            raise ValueError(f"R must be a positive integer, got {self.R}")
        if self.beta < 0 or self.gamma < 0 or self.beta + self.gamma <= 0:
            raise ValueError("beta and gamma must be nonnegative with a positive sum")

    def to_dict(self) -> dict:
        return {"R": self.R, "beta": self.beta, "gamma": self.gamma}


def base_prototypes(bank: FeatureBank, transform: TransformParams = transforms.IDENTITY,
                    view: int | None = None) -> BasePrototypes:
    """Mean transformed feature of every base class present in ``bank``."""
    feats = bank.features[0] if view is None else bank.view_features(view)
    z = transforms.apply(transform, feats.astype(np.float64))
    ids = bank.present_classes
    centers = np.stack([z[bank.class_rows[c]].mean(axis=0) for c in ids])
    return BasePrototypes(centers, tuple(ids))


class BasePrototypeCache:
    """Base prototypes computed once per ``(view, transform)`` for one bank."""

    def __init__(self, bank: FeatureBank):
        self.bank = bank
        self._store: dict = {}

    def get(self, transform: TransformParams, view: int | None = None) -> BasePrototypes:
        key = (view, transform)
        if key not in self._store:
            self._store[key] = base_prototypes(self.bank, transform, view)
        return self._store[key]


def _centers(base) -> np.ndarray:
    return base.centers if isinstance(base, BasePrototypes) else np.atleast_2d(base)


def select_surrogates(novel_centers, base, R: int) -> np.ndarray:
    """Sorted base indices in the union of every novel center's top-R nearest base centers."""
    base_c = _centers(base)
    if not 1 <= R <= base_c.shape[0]:
        raise ValueError(f"R={R} outside [1, {base_c.shape[0]}]")
    d = pairwise_distances(novel_centers, base_c)
    top = np.argsort(d, axis=1, kind="stable")[:, :R]
    return np.unique(top)


def surrogate_repr(points, surrogate_centers) -> np.ndarray:
    """Squared distances from each point to each surrogate center, in surrogate order."""
    sc = np.atleast_2d(np.asarray(surrogate_centers, dtype=np.float64))
    if sc.shape[0] == 0 or sc.size == 0:
        raise ValueError("empty surrogate list")
    p = np.asarray(points, dtype=np.float64)
    out = pairwise_distances(np.atleast_2d(p), sc)
    return out[0] if p.ndim == 1 else out


def combined_criterion(d, dpp, params: SurrogateParams) -> np.ndarray:
    """``beta * d / |d|_1 + gamma * dpp / |dpp|_1`` along the last axis."""
    d = np.asarray(d, dtype=np.float64)
    dpp = np.asarray(dpp, dtype=np.float64)
    out = np.zeros(np.broadcast_shapes(d.shape, dpp.shape))
    for weight, term, name in ((params.beta, d, "feature"), (params.gamma, dpp, "surrogate")):
        if weight == 0:
            continue
        norm = np.sum(np.abs(term), axis=-1, keepdims=True)
        if np.any(norm == 0):
            raise DomainError(f"{name} distances have zero L1 norm", stage="combined_criterion")
        out = out + weight * term / norm
    return out


def surrogate_criterion(support_protos, queries, base, params: SurrogateParams,
                        surrogate_metric: str = "sqeuclidean") -> np.ndarray:
    """Final criterion matrix ``(Q, K)`` for already transformed features."""
    if surrogate_metric not in METRICS:
        raise ValueError(f"unknown metric {surrogate_metric!r}")
    base_c = _centers(base)
    d = pairwise_distances(queries, support_protos)
    if params.gamma == 0:
        return combined_criterion(d, np.zeros_like(d), params)
    chosen = base_c[select_surrogates(support_protos, base_c, params.R)]
    proto_sr = surrogate_repr(support_protos, chosen)
    query_sr = surrogate_repr(np.atleast_2d(queries), chosen)
    dpp = pairwise_distances(query_sr, proto_sr, surrogate_metric)
    return combined_criterion(d, dpp, params)


def classify_surrogate(episode: Episode, base: BasePrototypes, params: SurrogateParams,
                       transform: TransformParams = transforms.IDENTITY, view: int = 0,
                       surrogate_metric: str = "sqeuclidean") -> np.ndarray:
    """Predictions for every query of ``episode``.

    ``base`` must already be computed under ``transform`` (see
    :func:`base_prototypes`); support and query features are transformed here.
    """
    support = transforms.apply(transform, episode.support_views[view])
    query = transforms.apply(transform, episode.query_views[view])
    protos = support.reshape(episode.k, episode.n_shot, -1).mean(axis=1)
    crit = surrogate_criterion(protos, query, base, params, surrogate_metric)
    return np.argmin(crit, axis=1)

