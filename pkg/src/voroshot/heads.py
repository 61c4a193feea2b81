"""Episode predictors: callables mapping an :class:`Episode` to query predictions."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from . import classifiers, ensemble, geometry, transforms
from .data.bank import FeatureBank
from .data.sampling import EpisodeSpec
from .ensemble import Config, SurrogateHead
from .episode import Episode
from .evaluation import sweep_grid
from .surrogate import BasePrototypeCache, SurrogateParams, classify_surrogate
from .transforms import TransformParams

LR_KINDS = ("power_lr", "voronoi_lr")


def _transformed(ep: Episode, transform: TransformParams, view: int = 0):
    pos = ep.view_pos(view)
    return (transforms.apply(transform, ep.support_views[pos]),
            transforms.apply(transform, ep.query_views[pos]))


def vd_predictor(transform: TransformParams = transforms.IDENTITY, view: int = 0):
    def predict(ep: Episode) -> np.ndarray:
        s, q = _transformed(ep, transform, view)
        protos = s.reshape(ep.k, ep.n_shot, -1).mean(axis=1)
        return geometry.assign_vd_many(protos, q)
    return predict


def linear_predictor(kind: str, transform: TransformParams = transforms.IDENTITY,
                     opts: classifiers.TrainOptions = classifiers.TrainOptions(), view: int = 0):
    if kind not in LR_KINDS:
        raise ValueError(f"unknown linear head {kind!r}")

    def predict(ep: Episode) -> np.ndarray:
        s, q = _transformed(ep, transform, view)
        model = classifiers.fit_linear(s, ep.support_labels, ep.k, opts, kind == "voronoi_lr")
        return classifiers.classify_linear_many(model, q)
    return predict


def civd_predictor(lr_kind: str = "voronoi_lr", transform: TransformParams = transforms.IDENTITY,
                   opts: classifiers.TrainOptions = classifiers.TrainOptions(),
                   alpha: float = 1.0, view: int = 0):
    """Prototype and LR centers merged into two-member clusters per class."""
    if lr_kind not in LR_KINDS:
        raise ValueError(f"unknown linear head {lr_kind!r}")

    def predict(ep: Episode) -> np.ndarray:
        s, q = _transformed(ep, transform, view)
        protos = s.reshape(ep.k, ep.n_shot, -1).mean(axis=1)
        model = classifiers.fit_linear(s, ep.support_labels, ep.k, opts,
                                       lr_kind == "voronoi_lr")
        return classifiers.classify_civd_integrated_many(protos, 0.5 * model.W, q, alpha)
    return predict


def surrogate_predictor(base: BasePrototypeCache, params: SurrogateParams,
                        transform: TransformParams = transforms.IDENTITY, view: int = 0):
    def predict(ep: Episode) -> np.ndarray:
        return classify_surrogate(ep, base.get(transform, view), params, transform,
                                  ep.view_pos(view))
    return predict


def ensemble_predictor(pool: Sequence[Config], base: BasePrototypeCache | None = None,
                       alpha: float = 1.0):
    pool = tuple(pool)

    def predict(ep: Episode) -> np.ndarray:
        return ensemble.predict_episode(ensemble.fit_members(pool, ep, base), ep, alpha)
    return predict


def best_beta_per_r(base: BasePrototypeCache, validation: FeatureBank, spec: EpisodeSpec,
                    Rs: Sequence[int], betas: Sequence[float], gamma: float = 1.0,
                    transform: TransformParams = transforms.IDENTITY, view: int = 0):
    """Validation grid over ``(R, beta)``; returns the per-R best beta and the full table."""
    return sweep_grid(
        Rs, betas,
        lambda R, beta: surrogate_predictor(base, SurrogateParams(R, beta, gamma), transform, view),
        validation, spec)


def surrogate_heads_from_grid(result, gamma: float = 1.0) -> tuple:
    return tuple(SurrogateHead(SurrogateParams(R, beta, gamma))
                 for R, beta in sorted(result.best.items()))


__all__ = [
    "vd_predictor",
    "linear_predictor",
    "civd_predictor",
    "surrogate_predictor",
    "ensemble_predictor",
    "best_beta_per_r",
    "surrogate_heads_from_grid",
]
