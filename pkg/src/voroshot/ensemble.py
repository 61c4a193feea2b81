"""Configuration pools and the cluster-to-cluster (CCVD) geometric ensemble.

A configuration is a (view, transform, head) triple. Applied to the support
set, configuration ``i`` yields member ``i`` of every class cluster; applied
to a query it yields member ``i`` of the query cluster. The ensemble score of
class ``k`` is ``-sign(alpha) * sum_i dist_i(class k, query) ** alpha`` where
``dist_i`` is the head's own per-class distance: squared Euclidean distance to
the prototype for feature heads, the mixed criterion for surrogate heads.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import transforms
from .episode import Episode
from .errors import ConfigError, DimensionError
from .geometry import ccvd_scores, pairwise_distances
from .surrogate import (
    BasePrototypeCache,
    SurrogateParams,
    combined_criterion,
    select_surrogates,
    surrogate_repr,
)
from .transforms import TransformParams

__all__ = [
    "FeatureHead",
    "SurrogateHead",
    "Config",
    "PoolSpec",
    "MemberFit",
    "EnsembleModel",
    "QueryCluster",
    "build_pool",
    "fit_members",
    "query_cluster",
    "member_distances",
    "predict",
    "predict_episode",
    "scheme_full",
    "scheme_random",
    "scheme_guided",
    "GuidedTrace",
]


@dataclass(frozen=True)
class FeatureHead:
    def label(self) -> str:
        return "feature"

    def to_dict(self) -> dict:
        return {"kind": "feature"}


@dataclass(frozen=True)
class SurrogateHead:
    params: SurrogateParams = SurrogateParams()

    def label(self) -> str:
        p = self.params
        return f"surrogate(R={p.R},beta={p.beta:g},gamma={p.gamma:g})"

    def to_dict(self) -> dict:
        return {"kind": "surrogate", **self.params.to_dict()}


Head = Union[FeatureHead, SurrogateHead]


@dataclass(frozen=True)
class Config:
    view: int = 0
    transform: TransformParams = transforms.IDENTITY
    head: Head = FeatureHead()

    def label(self) -> str:
        return f"view={self.view};{self.transform.label()};{self.head.label()}"

    def to_dict(self) -> dict:
        return {"view": self.view, "transform": self.transform.to_dict(),
                "head": self.head.to_dict()}


@dataclass(frozen=True)
class PoolSpec:
    views: tuple = (0,)
    transforms: tuple = (transforms.IDENTITY,)
    heads: tuple = (FeatureHead(),)


def build_pool(spec: PoolSpec) -> tuple:
    """Cartesian product with views outermost, then transforms, then heads."""
    pool = tuple(Config(v, t, h) for v, t, h in
                 itertools.product(spec.views, spec.transforms, spec.heads))
    if not pool:
        raise ConfigError("configuration pool is empty")
    return pool


@dataclass(frozen=True)
class MemberFit:
    """Per-configuration state fitted on one episode's support set."""

    config: Config
    prototypes: np.ndarray
    surrogate_centers: np.ndarray | None = None
    surrogate_protos: np.ndarray | None = None

    @property
    def representatives(self) -> np.ndarray:
        """Member of each class cluster: prototype, or its surrogate vector."""
        return self.prototypes if self.surrogate_protos is None else self.surrogate_protos

    def distances(self, z: np.ndarray) -> np.ndarray:
        """``(Q, K)`` distances from transformed queries ``z`` to every class."""
        z = np.atleast_2d(z)
        if z.shape[1] != self.prototypes.shape[1]:
            raise DimensionError(
                f"query dimension {z.shape[1]} != member dimension {self.prototypes.shape[1]}")
        d = pairwise_distances(z, self.prototypes)
        if self.surrogate_centers is None:
            return d
        params = self.config.head.params
        if params.gamma == 0:
            return combined_criterion(d, np.zeros_like(d), params)
        dpp = pairwise_distances(surrogate_repr(z, self.surrogate_centers),
                                 self.surrogate_protos)
        return combined_criterion(d, dpp, params)


@dataclass(frozen=True)
class EnsembleModel:
    pool: tuple
    members: tuple
    k: int

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def clusters(self) -> list:
        """Class clusters: ``clusters[k][i]`` is member ``i`` of class ``k``."""
        return [[m.representatives[k] for m in self.members] for k in range(self.k)]


@dataclass(frozen=True)
class QueryCluster:
    """Transformed queries per configuration; ``points[i]`` has shape ``(Q, n_i)``."""

    pool: tuple
    points: tuple = field(repr=False)


def _transform(cfg: Config, feats: np.ndarray) -> np.ndarray:
    return transforms.apply(cfg.transform, feats)


def fit_members(pool: Sequence[Config], episode: Episode,
                base: BasePrototypeCache | None = None) -> EnsembleModel:
    pool = tuple(pool)
    members = []
    for cfg in pool:
        support = _transform(cfg, episode.support_views[episode.view_pos(cfg.view)])
        protos = support.reshape(episode.k, episode.n_shot, -1).mean(axis=1)
        if isinstance(cfg.head, SurrogateHead):
            if base is None:
                raise ConfigError("surrogate heads need base-class prototypes")
            base_c = base.get(cfg.transform, cfg.view).centers
            if cfg.head.params.gamma == 0:
                members.append(MemberFit(cfg, protos, base_c[:0], np.zeros((episode.k, 0))))
                continue
            chosen = base_c[select_surrogates(protos, base_c, cfg.head.params.R)]
            members.append(MemberFit(cfg, protos, chosen, surrogate_repr(protos, chosen)))
        else:
            members.append(MemberFit(cfg, protos))
    return EnsembleModel(pool, tuple(members), episode.k)


def query_cluster(pool: Sequence[Config], episode: Episode) -> QueryCluster:
    pool = tuple(pool)
    pts = tuple(_transform(c, episode.query_views[episode.view_pos(c.view)]) for c in pool)
    return QueryCluster(pool, pts)


def _distances(model: EnsembleModel, qc: QueryCluster) -> np.ndarray:
    if qc.pool != model.pool:
        raise ConfigError("query cluster was built with a different pool order")
    return np.stack([m.distances(z) for m, z in zip(model.members, qc.points)])


def member_distances(model: EnsembleModel, episode: Episode) -> np.ndarray:
    """``(L, Q, K)`` per-member distances for every query of ``episode``."""
    return _distances(model, query_cluster(model.pool, episode))


def predict(model: EnsembleModel, qc: QueryCluster, alpha: float = 1.0) -> np.ndarray:
    """CCVD assignment of every query in ``qc``; ties go to the lowest class."""
    return np.argmax(ccvd_scores(_distances(model, qc), alpha), axis=1)


def predict_episode(model: EnsembleModel, episode: Episode, alpha: float = 1.0) -> np.ndarray:
    return predict(model, query_cluster(model.pool, episode), alpha)


def scheme_full(pool: Sequence[Config]) -> tuple:
    return tuple(pool)


def scheme_random(pool: Sequence[Config], size: int, seed: int = 0) -> tuple:
    """Uniform subset of ``size`` configs without replacement, in pool order."""
    pool = tuple(pool)
    if not 1 <= size <= len(pool):
        raise ValueError(f"subset size {size} outside [1, {len(pool)}]")
    picks = np.sort(np.random.default_rng(seed).choice(len(pool), size=size, replace=False))
    return tuple(pool[i] for i in picks)


@dataclass(frozen=True)
class GuidedTrace:
    member_accuracy: np.ndarray
    order: np.ndarray
    curve: np.ndarray
    length: int


def _episode_accuracy(scores: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(np.argmax(scores, axis=-1) == labels))


def scheme_guided(pool: Sequence[Config], episodes: Sequence[Episode], alpha: float = 1.0,
                  base: BasePrototypeCache | None = None, return_trace: bool = False):
    """Validation-guided prefix of the accuracy-ranked pool.

    Configs are ranked by individual validation accuracy (ties keep pool
    order), added one at a time, and the prefix reaching the first maximum of
    the ensemble validation accuracy is returned (in ranked order).
    """
    pool = tuple(pool)
    episodes = list(episodes)
    if not episodes:
        raise ValueError("guided selection needs at least one validation episode")
    contrib = []
    for ep in episodes:
        if ep.query_labels is None:
            raise ValueError("validation episodes must be labeled")
        d = member_distances(fit_members(pool, ep, base), ep)
        # per-member influence terms; their sum over members is the CCVD score
        contrib.append(np.stack([ccvd_scores(d[i:i + 1], alpha) for i in range(len(pool))]))
    member_acc = np.array([
        np.mean([_episode_accuracy(c[i], ep.query_labels) for c, ep in zip(contrib, episodes)])
        for i in range(len(pool))
    ])
    order = np.argsort(-member_acc, kind="stable")
    running = [np.zeros_like(c[0]) for c in contrib]
    curve = np.empty(len(pool))
    for j, i in enumerate(order):
        accs = []
        for e, (c, ep) in enumerate(zip(contrib, episodes)):
            running[e] = running[e] + c[i]
            accs.append(_episode_accuracy(running[e], ep.query_labels))
        curve[j] = np.mean(accs)
    length = int(np.argmax(curve)) + 1
    chosen = tuple(pool[i] for i in order[:length])
    if return_trace:
        return chosen, GuidedTrace(member_acc, order, curve, length)
    return chosen
