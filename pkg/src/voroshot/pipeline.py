"""Turn a :class:`RunConfig` into predictors, reports and timings."""
from __future__ import annotations

import time
from dataclasses import replace

import numpy as np

from . import classifiers, ensemble, geometry, heads, transforms
from .config import RunConfig
from .data.bank import FeatureBank
from .data.io import load_bank
from .data.sampling import EpisodeSpec, sample_episode
from .ensemble import Config, FeatureHead, SurrogateHead
from .errors import ConfigError
from .evaluation import EvalReport, evaluate
from .surrogate import BasePrototypeCache, SurrogateParams

__all__ = ["load_banks", "validation_spec", "build_predictor", "run_eval", "run_bench",
           "resolve_pool"]


def load_banks(cfg: RunConfig, splits) -> dict:
    return {s: load_bank(cfg.bank_path(s)) for s in splits}


def needed_splits(cfg: RunConfig) -> list:
    splits = ["novel"]
    uses_surrogate = cfg.head == "surrogate" or (
        cfg.head == "ensemble" and (cfg.pool_surrogate_grid or any(
            isinstance(h, SurrogateHead) for h in cfg.pool.heads)))
    if uses_surrogate:
        splits.append("base")
    grid = cfg.head == "surrogate" and cfg.surrogate.is_grid
    if grid or (cfg.head == "ensemble" and (cfg.pool_surrogate_grid
                                            or cfg.scheme.kind == "guided")):
        splits.append("validation")
    return splits


def validation_spec(cfg: RunConfig) -> EpisodeSpec:
    return replace(cfg.episodes, episodes=cfg.validation_episodes)


def _best_surrogate(cfg: RunConfig, cache: BasePrototypeCache, val: FeatureBank):
    """Single best ``(R, beta)`` cell; ties go to the smaller R, then smaller beta."""
    g = cfg.surrogate
    if not g.is_grid:
        return SurrogateParams(g.Rs[0], g.betas[0], g.gamma), None
    res = heads.best_beta_per_r(cache, val, validation_spec(cfg), g.Rs, g.betas, g.gamma,
                                cfg.transform, cfg.view)
    best_R = max(sorted(res.best), key=lambda R: res.accuracy[(R, res.best[R])])
    return SurrogateParams(best_R, res.best[best_R], g.gamma), res


def _grid_table(res) -> dict:
    return {str(R): {"beta": beta, "accuracy": res.accuracy[(R, beta)]}
            for R, beta in sorted(res.best.items())}


def resolve_pool(cfg: RunConfig, banks: dict, cache: BasePrototypeCache | None):
    """Expand the configured pool and apply the selection scheme.

    Returns the chosen configs and a description of how they were chosen.
    """
    spec = cfg.pool
    info: dict = {}
    hs = tuple(spec.heads)
    if cfg.pool_surrogate_grid:
        g = cfg.surrogate
        # the grid is searched once, on the first view and transform of the pool
        res = heads.best_beta_per_r(cache, banks["validation"], validation_spec(cfg), g.Rs,
                                    g.betas, g.gamma, spec.transforms[0], spec.views[0])
        hs = hs + heads.surrogate_heads_from_grid(res, g.gamma)
        info["surrogate_grid"] = _grid_table(res)
    pool = ensemble.build_pool(ensemble.PoolSpec(spec.views, spec.transforms, hs))
    info["pool_size"] = len(pool)
    scheme = cfg.scheme
    if scheme.kind == "full":
        chosen = ensemble.scheme_full(pool)
    elif scheme.kind == "random":
        if scheme.size > len(pool):
            raise ConfigError(f"subset size exceeds pool size {len(pool)}", key="scheme.size")
        chosen = ensemble.scheme_random(pool, scheme.size, scheme.seed)
    else:
        vspec = validation_spec(cfg)
        val = [sample_episode(banks["validation"], vspec, i) for i in range(vspec.episodes)]
        chosen, trace = ensemble.scheme_guided(pool, val, cfg.alpha, cache, return_trace=True)
        info["guided_curve"] = [float(x) for x in trace.curve]
    info["members"] = [c.label() for c in chosen]
    return chosen, info


def build_predictor(cfg: RunConfig, banks: dict):
    """Predictor for the configured head plus extra report description."""
    base = banks.get("base")
    cache = BasePrototypeCache(base) if base is not None else None
    head = cfg.head
    if head == "vd":
        return heads.vd_predictor(cfg.transform, cfg.view), {}
    if head in heads.LR_KINDS:
        return heads.linear_predictor(head, cfg.transform, cfg.train, cfg.view), {}
    if head == "civd":
        return heads.civd_predictor(cfg.civd_lr_head, cfg.transform, cfg.train, cfg.alpha,
                                    cfg.view), {}
    if head == "surrogate":
        params, res = _best_surrogate(cfg, cache, banks.get("validation"))
        info = {"chosen": params.to_dict()}
        if res is not None:
            info["surrogate_grid"] = _grid_table(res)
        return heads.surrogate_predictor(cache, params, cfg.transform, cfg.view), info
    pool, info = resolve_pool(cfg, banks, cache)
    return heads.ensemble_predictor(pool, cache, cfg.alpha), info


def run_eval(cfg: RunConfig, banks: dict | None = None) -> EvalReport:
    banks = banks if banks is not None else load_banks(cfg, needed_splits(cfg))
    predictor, info = build_predictor(cfg, banks)
    desc = {**cfg.describe(), **info}
    return evaluate(predictor, banks["novel"], cfg.episodes, desc, workers=cfg.workers)


def _single_pool(cfg: RunConfig) -> tuple:
    if cfg.head == "vd":
        return (Config(cfg.view, cfg.transform, FeatureHead()),)
    g = cfg.surrogate
    return (Config(cfg.view, cfg.transform, SurrogateHead(SurrogateParams(g.Rs[0], g.betas[0],
                                                                         g.gamma))),)


def run_bench(cfg: RunConfig, banks: dict | None = None) -> dict:
    """Wall-clock of member fitting, query classification and reduction per episode.

    Pool heads reduce with the CCVD argmax; linear heads with the logit
    argmax; the CIVD head with the two-member influence argmax.
    """
    banks = banks if banks is not None else load_banks(cfg, needed_splits(cfg))
    bank = banks["novel"]
    cache = BasePrototypeCache(banks["base"]) if "base" in banks else None
    spec = cfg.episodes
    spec.check(bank)
    if cfg.head == "ensemble":
        pool, _ = resolve_pool(cfg, banks, cache)
    elif cfg.head in ("vd", "surrogate"):
        pool = _single_pool(cfg)
    else:
        pool = None
    rows = []
    for i in range(spec.episodes):
        ep = sample_episode(bank, spec, i)
        t0 = time.perf_counter()
        if pool is not None:
            model = ensemble.fit_members(pool, ep, cache)
            t1 = time.perf_counter()
            d = ensemble.member_distances(model, ep)
            t2 = time.perf_counter()
            np.argmax(geometry.ccvd_scores(d, cfg.alpha), axis=1)
        else:
            pos = ep.view_pos(cfg.view)
            s = transforms.apply(cfg.transform, ep.support_views[pos])
            q = transforms.apply(cfg.transform, ep.query_views[pos])
            kind = cfg.civd_lr_head if cfg.head == "civd" else cfg.head
            model = classifiers.fit_linear(s, ep.support_labels, ep.k, cfg.train,
                                           kind == "voronoi_lr")
            protos = s.reshape(ep.k, ep.n_shot, -1).mean(axis=1)
            t1 = time.perf_counter()
            if cfg.head == "civd":
                d = np.stack([geometry.pairwise_distances(q, protos),
                              geometry.pairwise_distances(q, 0.5 * model.W)])
            else:
                d = model.logits(q)
            t2 = time.perf_counter()
            if cfg.head == "civd":
                np.argmax(geometry.influence_from_distances(d, cfg.alpha, axis=0), axis=1)
            else:
                np.argmax(d, axis=1)
        t3 = time.perf_counter()
        rows.append((t1 - t0, t2 - t1, t3 - t2))
    arr = np.array(rows)
    phases = ("fit", "classify", "reduce")
    return {
        "head": cfg.head,
        "members": len(pool) if pool is not None else 1,
        "episodes": spec.episodes,
        "per_episode": {p: arr[:, j].tolist() for j, p in enumerate(phases)},
        "total": {p: float(arr[:, j].sum()) for j, p in enumerate(phases)},
        "total_seconds": float(arr.sum()),
    }
