"""Episode-loop evaluation, interval statistics and report persistence."""
from __future__ import annotations

import csv
import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .data.bank import FeatureBank
from .data.sampling import EpisodeSpec, sample_episode
from .episode import Episode
from .errors import VoroshotError

__all__ = [
    "EvalReport",
    "EpisodeFailure",
    "DegenerateIntervalWarning",
    "evaluate",
    "episode_accuracy",
    "confidence_interval",
    "geometric_variance",
    "GridResult",
    "sweep_grid",
]

Predictor = Callable[[Episode], np.ndarray]
Z95 = 1.96


class DegenerateIntervalWarning(UserWarning):
    """A confidence interval was requested from fewer than two values."""


class EpisodeFailure(VoroshotError):
    def __init__(self, index: int, cause: BaseException):
        self.index = index
        self.cause = cause
        super().__init__(f"episode {index} failed: {cause}")


def confidence_interval(accs: Sequence[float]) -> tuple[float, float]:
    """Mean and normal-approximation 95% half-width ``1.96 * s / sqrt(E)``.

    ``s`` is the Bessel-corrected standard deviation. A single value yields a
    zero half-width and a :class:`DegenerateIntervalWarning`.
    """
    a = np.asarray(accs, dtype=np.float64)
    if a.size == 0:
        raise ValueError("no values")
    mean = float(np.mean(a))
    if a.size == 1:
        warnings.warn("half-width undefined for a single value", DegenerateIntervalWarning,
                      stacklevel=2)
        return mean, 0.0
    if np.all(a == a[0]):
        # exact zero rather than rounding residue from the variance
        return mean, 0.0
    s = float(np.std(a, ddof=1))
    return mean, Z95 * s / math.sqrt(a.size)


def geometric_variance(support, labels=None) -> float:
    """Mean over classes of the mean pairwise Euclidean distance between support points.

    ``support`` is either ``(K, N, n)`` or ``(K*N, n)`` with ``labels``.
    An :class:`Episode` is also accepted (view 0).
    """
    if isinstance(support, Episode):
        groups = list(support.support_by_class(0))
    elif labels is None:
        groups = list(np.asarray(support, dtype=np.float64))
    else:
        x = np.asarray(support, dtype=np.float64)
        lab = np.asarray(labels)
        groups = [x[lab == c] for c in np.unique(lab)]
    if not groups:
        raise ValueError("empty support")
    per_class = []
    for g in groups:
        n = g.shape[0]
        if n < 2:
            raise ValueError("geometric variance needs at least two shots per class")
        diff = g[:, None, :] - g[None, :, :]
        dist = np.sqrt(np.einsum("ijn,ijn->ij", diff, diff))
        iu = np.triu_indices(n, k=1)
        per_class.append(dist[iu].sum() / (n * (n - 1) / 2))
    return float(np.mean(per_class))


def episode_accuracy(pred, labels) -> float:
    pred = np.asarray(pred)
    labels = np.asarray(labels)
    if pred.shape != labels.shape:
        raise ValueError(f"{pred.shape[0]} predictions for {labels.shape[0]} queries")
    return float(np.mean(pred == labels))


@dataclass
class EvalReport:
    accuracies: list
    mean: float
    half_width: float
    description: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    seed: int = 0
    gv: list | None = None

    def __post_init__(self):
        if self.half_width < 0:
            raise ValueError("half-width must be nonnegative")

    def to_dict(self, timing: bool = True) -> dict:
        d = {
            "accuracies": list(self.accuracies),
            "mean": self.mean,
            "half_width": self.half_width,
            "episodes": len(self.accuracies),
            "description": self.description,
            "seed": self.seed,
        }
        if timing:
            d["timing"] = self.timing
        return d

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["episode_index", "accuracy", "gv"])
            gv = self.gv if self.gv is not None else [None] * len(self.accuracies)
            for i, (acc, g) in enumerate(zip(self.accuracies, gv)):
                w.writerow([i, repr(acc), "" if g is None else repr(g)])


def evaluate(predictor: Predictor, bank: FeatureBank, spec: EpisodeSpec,
             description: dict | None = None, workers: int = 1,
             with_gv: bool = True) -> EvalReport:
    """Run ``spec.episodes`` seeded episodes through ``predictor``.

    Episode accuracy is the fraction of queries predicted correctly; the
    report aggregates per-episode accuracies in episode-index order whatever
    the number of workers.
    """
    spec.check(bank)
    timing = {"sampling": 0.0, "prediction": 0.0}

    def run(i: int):
        t0 = time.perf_counter()
        ep = sample_episode(bank, spec, i)
        t1 = time.perf_counter()
        try:
            pred = predictor(ep)
            acc = episode_accuracy(pred, ep.query_labels)
        except Exception as exc:
            raise EpisodeFailure(i, exc) from exc
        t2 = time.perf_counter()
        gv = geometric_variance(ep) if with_gv and ep.n_shot >= 2 else None
        return acc, gv, t1 - t0, t2 - t1

    start = time.perf_counter()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, range(spec.episodes)))
    else:
        rows = [run(i) for i in range(spec.episodes)]
    accs = [r[0] for r in rows]
    for r in rows:
        timing["sampling"] += r[2]
        timing["prediction"] += r[3]
    timing["total"] = time.perf_counter() - start
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateIntervalWarning)
        mean, hw = confidence_interval(accs)
    gv = [r[1] for r in rows] if with_gv and rows[0][1] is not None else None
    desc = {"ways": spec.ways, "shots": spec.shots, "queries": spec.queries,
            **(description or {})}
    return EvalReport(accs, mean, hw, desc, timing, spec.seed, gv)


@dataclass(frozen=True)
class GridResult:
    best: dict
    accuracy: dict


def sweep_grid(rows: Sequence, values: Sequence, make_predictor: Callable, bank: FeatureBank,
               spec: EpisodeSpec) -> GridResult:
    """For each grid row pick the value with the best mean validation accuracy.

    ``make_predictor(row, value)`` returns a predictor. Ties go to the smaller
    value.
    """
    rows = list(rows)
    values = sorted(values)
    if not rows or not values:
        raise ValueError("empty grid")
    acc = {}
    best = {}
    for r in rows:
        best_val, best_acc = None, -1.0
        for v in values:
            a = evaluate(make_predictor(r, v), bank, spec, with_gv=False).mean
            acc[(r, v)] = a
            if a > best_acc:
                best_val, best_acc = v, a
        best[r] = best_val
    return GridResult(best, acc)
