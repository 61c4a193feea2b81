"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py``. Golden values were pinned
from the first certified run; the pipeline is deterministic, so they are
compared exactly.
"""
from __future__ import annotations

import math
import sys
import time
import warnings
from functools import cache

import numpy as np
import pytest

from voroshot import classifiers, ensemble, geometry, heads, transforms
from voroshot.classifiers import TrainOptions
from voroshot.data import (
    EpisodeSpec, FeatureBank, SyntheticSpec, gen_synthetic, sample_episode,
)
from voroshot.episode import Episode
from voroshot.evaluation import confidence_interval, evaluate, geometric_variance
from voroshot.surrogate import (
    BasePrototypeCache, SurrogateParams, base_prototypes, classify_surrogate, select_surrogates,
    surrogate_repr,
)
from voroshot.transforms import TransformParams

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # standalone run
    ACCEPTANCE_LINES = []

pytestmark = pytest.mark.acceptance

# golden values from the first certified run
GOLDEN_ENSEMBLE_16 = 0.8463333333333333
GOLDEN_VD_1SHOT = 0.8496666666666667
GOLDEN_SURROGATE_ENSEMBLE = 0.8525333333333333
GOLDEN_GUIDED = (0.7796, 0.7713333333333332)
GOLDEN_VD_5SHOT_2000 = 0.98208

SEED = 42
ONE_SHOT = EpisodeSpec(ways=5, shots=1, queries=15, episodes=200, seed=SEED)
VALIDATION = EpisodeSpec(ways=5, shots=1, queries=15, episodes=100, seed=SEED)
T2 = (transforms.IDENTITY, TransformParams(1.0, 0.04, 0.5))
T4 = tuple(TransformParams(1.0, b, lam) for lam in (1.0, 0.5) for b in (0.0, 0.04))


def check(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@cache
def default_banks():
    return gen_synthetic(SyntheticSpec(seed=SEED))


@cache
def jittered_banks(n_views: int, shuffled: tuple = ()):
    return gen_synthetic(SyntheticSpec(seed=SEED, n_views=n_views, view_jitter=0.5,
                                       shuffled_views=shuffled))


def loop_influence(cluster, z, alpha):
    total = 0.0
    for c in cluster:
        d = 0.0
        for a, b in zip(c, z):
            d += (a - b) * (a - b)
        total += d ** alpha
    return -math.copysign(1.0, alpha) * total


def loop_ccvd(cluster, query_cluster, alpha):
    total = 0.0
    for c, q in zip(cluster, query_cluster):
        d = 0.0
        for a, b in zip(c, q):
            d += (a - b) * (a - b)
        total += d ** alpha
    return -math.copysign(1.0, alpha) * total


def first_argmax(values):
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return best


def test_criterion_01_voronoi_lr_is_vd():
    t0 = time.perf_counter()
    agree = total = 0
    for s in range(100):
        rng = np.random.default_rng(s)
        W = rng.normal(size=(5, 64))
        model = classifiers.LinearModel(W, classifiers.voronoi_bias(W))
        z = rng.normal(size=(1000, 64))
        a = classifiers.classify_linear_many(model, z)
        b = geometry.assign_vd_many(classifiers.lr_centers(model), z)
        agree += int(np.sum(a == b))
        total += len(z)
        # the single-point entry points share the same kernel
        assert classifiers.classify_linear(model, z[0]) == geometry.assign_vd(
            classifiers.lr_centers(model), z[0])
    dt = time.perf_counter() - t0
    check(1, agree == total and dt < 5.0,
          f"agreement {agree}/{total}, {dt:.2f}s (limit 5s)")


def test_criterion_02_pd_collapse():
    agree = total = 0
    for s in range(100):
        rng = np.random.default_rng(10_000 + s)
        centers = rng.normal(size=(int(rng.integers(2, 9)), 16))
        weights = np.full(len(centers), rng.normal())
        z = rng.normal(size=(1000, 16))
        agree += int(np.sum(geometry.assign_pd_many(centers, weights, z)
                            == geometry.assign_vd_many(centers, z)))
        total += len(z)
    check(2, agree == total, f"agreement {agree}/{total}")


def test_criterion_03_civd_ccvd_reductions():
    civd_ok = ccvd_ok = total = 0
    for s in range(100):
        rng = np.random.default_rng(20_000 + s)
        alpha = float(rng.choice([1.0, 2.0, 0.5, -1.0]))
        centers = rng.normal(size=(5, 8))
        z = rng.normal(size=(1000, 8))
        vd = geometry.assign_vd_many(centers, z)
        civd = geometry.assign_civd_many([c[None, :] for c in centers], z, alpha)
        d = geometry.pairwise_distances(z, centers)[None]
        ccvd = np.argmax(geometry.ccvd_scores(d, alpha), axis=1)
        civd_ok += int(np.sum(civd == vd))
        ccvd_ok += int(np.sum(ccvd == vd))
        total += len(z)
        for q in range(0, 1000, 100):
            assert geometry.assign_ccvd([[c] for c in centers], [z[q]], alpha) == vd[q]
    check(3, civd_ok == total and ccvd_ok == total,
          f"singleton CIVD {civd_ok}/{total}, L=1 CCVD {ccvd_ok}/{total}")


def test_criterion_04_brute_force_oracle():
    agree = 0
    n_inst = 1000
    for s in range(n_inst):
        rng = np.random.default_rng(30_000 + s)
        k = int(rng.integers(1, 6))
        L = int(rng.integers(1, 9))
        alpha = float(rng.choice([-2.0, -1.0, 0.5, 1.0, 2.0]))
        n = int(rng.integers(1, 17))
        clusters = [rng.normal(size=(int(rng.integers(1, L + 1)), n)) for _ in range(k)]
        z = rng.normal(size=n)
        civd_ok = geometry.assign_civd(clusters, z, alpha) == first_argmax(
            [loop_influence(c.tolist(), z.tolist(), alpha) for c in clusters])
        dims = [int(rng.integers(1, 17)) for _ in range(L)]
        cc = [[rng.normal(size=d) for d in dims] for _ in range(k)]
        qc = [rng.normal(size=d) for d in dims]
        ccvd_ok = geometry.assign_ccvd(cc, qc, alpha) == first_argmax(
            [loop_ccvd([m.tolist() for m in c], [q.tolist() for q in qc], alpha) for c in cc])
        agree += int(civd_ok and ccvd_ok)
    check(4, agree == n_inst, f"CIVD and CCVD match loop oracle on {agree}/{n_inst} instances")


def test_criterion_05_voronoi_lr_training():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    a = rng.normal(size=(10, 2)) * 0.3 + [2.0, 2.0]
    b = rng.normal(size=(10, 2)) * 0.3 + [-2.0, -2.0]
    ep = Episode.from_arrays(np.vstack([a, b]), np.repeat([0, 1], 10), np.vstack([a, b]))
    model = classifiers.train_voronoi_lr(ep, TrainOptions(lr=0.05, epochs=200, seed=SEED))
    acc = float(np.mean(classifiers.classify_linear_many(model, ep.support) == ep.support_labels))
    viol = model.constraint_violation()
    dt = time.perf_counter() - t0
    check(5, acc == 1.0 and viol < 1e-9 and dt < 10.0,
          f"support accuracy {acc:.3f}, max|b + |W|^2/4| = {viol:.1e}, {dt:.2f}s")


def test_criterion_06_surrogate_reductions():
    base, novel, _ = default_banks()
    bp = base_prototypes(base)
    g_ok = b_ok = total = 0
    for i in range(200):
        ep = sample_episode(novel, ONE_SHOT, i)
        s = transforms.apply(transforms.IDENTITY, ep.support)
        q = transforms.apply(transforms.IDENTITY, ep.query)
        protos = s.reshape(ep.k, ep.n_shot, -1).mean(axis=1)
        vd = geometry.assign_vd_many(protos, q)
        g0 = classify_surrogate(ep, bp, SurrogateParams(2, 1.0, 0.0))
        chosen = bp.centers[select_surrogates(protos, bp, 2)]
        pure = geometry.assign_vd_many(surrogate_repr(protos, chosen), surrogate_repr(q, chosen))
        b0 = classify_surrogate(ep, bp, SurrogateParams(2, 0.0, 1.0))
        g_ok += int(np.sum(g0 == vd))
        b_ok += int(np.sum(b0 == pure))
        total += len(q)
    check(6, g_ok == total and b_ok == total,
          f"gamma=0 vs VD {g_ok}/{total}, beta=0 vs surrogate-space VD {b_ok}/{total}")


def test_criterion_07_ensemble_gain():
    _, novel, _ = jittered_banks(4)
    pool = ensemble.build_pool(ensemble.PoolSpec((0, 1, 2, 3), T4))
    t0 = time.perf_counter()
    ens = evaluate(heads.ensemble_predictor(pool), novel, ONE_SHOT).mean
    dt = time.perf_counter() - t0
    members = [evaluate(heads.ensemble_predictor((c,)), novel, ONE_SHOT).mean for c in pool]
    mean_member = float(np.mean(members))
    ok = (len(pool) == 16 and ens >= mean_member - 0.005 and ens >= GOLDEN_ENSEMBLE_16
          and ens == GOLDEN_ENSEMBLE_16 and dt < 60.0)
    check(7, ok, f"CCVD {ens:.4f} vs mean member {mean_member:.4f} (golden "
                 f"{GOLDEN_ENSEMBLE_16:.4f}), {dt:.2f}s")


def test_criterion_08_guided_excludes_corrupted():
    _, _, val = jittered_banks(9, (4,))
    pool = ensemble.build_pool(ensemble.PoolSpec(tuple(range(9))))
    eps = [sample_episode(val, VALIDATION, i) for i in range(VALIDATION.episodes)]
    chosen, trace = ensemble.scheme_guided(pool, eps, return_trace=True)
    guided, full = float(trace.curve[trace.length - 1]), float(trace.curve[-1])
    excluded = all(c.view != 4 for c in chosen)
    ok = excluded and guided >= full and (guided, full) == GOLDEN_GUIDED
    check(8, ok, f"corrupted member excluded={excluded}, guided {guided:.4f} >= "
                 f"full {full:.4f}, {len(chosen)}/9 members")


def test_criterion_09_surrogate_benefit():
    base, novel, val = default_banks()
    cache_ = BasePrototypeCache(base)
    vd = evaluate(heads.vd_predictor(), novel, ONE_SHOT).mean
    grid = heads.best_beta_per_r(cache_, val, VALIDATION, range(1, 6), [0.5, 1.0, 2.0])
    pool = ensemble.build_pool(ensemble.PoolSpec(
        (0,), T2, (ensemble.FeatureHead(),) + heads.surrogate_heads_from_grid(grid)))
    pp = evaluate(heads.ensemble_predictor(pool, cache_), novel, ONE_SHOT).mean
    ok = pp >= vd and vd == GOLDEN_VD_1SHOT and pp == GOLDEN_SURROGATE_ENSEMBLE
    check(9, ok, f"surrogate ensemble {pp:.4f} >= VD {vd:.4f}, best beta per R {grid.best}")


def _scaled(bank: FeatureBank, c: float) -> FeatureBank:
    return FeatureBank(bank.features * c, bank.labels, bank.n_classes, bank.views, bank.split)


def test_criterion_10_rescaling_invariance():
    base, novel, _ = gen_synthetic(SyntheticSpec(seed=SEED, dim=32, n_views=2, view_jitter=0.5))
    spec = EpisodeSpec(5, 1, 15, 100, SEED)
    opts = TrainOptions(epochs=30)
    pool = ensemble.build_pool(ensemble.PoolSpec((0, 1), T2, (
        ensemble.FeatureHead(), ensemble.SurrogateHead(SurrogateParams(2)))))
    makers = {
        "vd": lambda c: heads.vd_predictor(),
        "power_lr": lambda c: heads.linear_predictor("power_lr", opts=opts),
        "voronoi_lr": lambda c: heads.linear_predictor("voronoi_lr", opts=opts),
        "civd": lambda c: heads.civd_predictor(opts=opts),
        "surrogate": lambda c: heads.surrogate_predictor(c, SurrogateParams(2)),
        "ensemble": lambda c: heads.ensemble_predictor(pool, c),
    }
    changed = 0
    for factor in (3.7, 0.01):
        base2, novel2 = _scaled(base, factor), _scaled(novel, factor)
        c1, c2 = BasePrototypeCache(base), BasePrototypeCache(base2)
        for make in makers.values():
            p1, p2 = make(c1), make(c2)
            for i in range(spec.episodes):
                changed += int(np.sum(p1(sample_episode(novel, spec, i))
                                      != p2(sample_episode(novel2, spec, i))))
    check(10, changed == 0, f"{changed} changed predictions over 100 episodes x "
                            f"{len(makers)} heads x 2 scale factors")


def test_criterion_11_determinism_and_speed():
    _, novel, _ = default_banks()
    spec = EpisodeSpec(5, 5, 15, 2000, SEED)
    t0 = time.perf_counter()
    r1 = evaluate(heads.vd_predictor(), novel, spec)
    dt = time.perf_counter() - t0
    r2 = evaluate(heads.vd_predictor(), novel, spec)
    same = r1.to_dict(timing=False) == r2.to_dict(timing=False)
    ok = same and dt < 10.0 and r1.mean == GOLDEN_VD_5SHOT_2000
    check(11, ok, f"identical reports={same}, mean {r1.mean:.5f}, {dt:.2f}s (limit 10s)")


def gv_loop(support):
    total = 0.0
    for cls in support:
        s, pairs = 0.0, 0
        for i in range(len(cls)):
            for j in range(i + 1, len(cls)):
                s += math.sqrt(sum((a - b) ** 2 for a, b in zip(cls[i], cls[j])))
                pairs += 1
        total += s / pairs
    return total / len(support)


def test_criterion_12_statistics():
    mean, hw = confidence_interval([1, 0, 1, 0])
    ci_ok = abs(mean - 0.5) < 1e-6 and abs(hw - 0.565803) < 1e-6
    gv_ok = geometric_variance(np.array([[[0.0, 0.0], [3.0, 4.0]]])) == 5.0
    agree = 0
    for s in range(100):
        rng = np.random.default_rng(40_000 + s)
        sup = rng.normal(size=(int(rng.integers(1, 6)), int(rng.integers(2, 6)),
                               int(rng.integers(1, 9))))
        agree += int(abs(geometric_variance(sup) - gv_loop(sup.tolist())) <= 1e-9)
    check(12, ci_ok and gv_ok and agree == 100,
          f"CI ({mean}, {hw:.6f}), GV pair = 5: {gv_ok}, GV loop agreement {agree}/100")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
