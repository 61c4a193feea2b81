"""Deterministic, platform-independent episode sampling.

Each episode gets its own SplitMix64 stream seeded with
``master_seed ^ episode_index``, so episodes can be drawn in any order or in
parallel without changing their contents.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..episode import Episode
from ..errors import DataError
from .bank import FeatureBank

MASK64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D649BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` (Lemire's multiply-shift with rejection)."""
        if n <= 0:
            raise ValueError("bound must be positive")
        m = self.next_u64() * n
        low = m & MASK64
        if low < n:
            threshold = ((1 << 64) - n) % n
            while low < threshold:
                m = self.next_u64() * n
                low = m & MASK64
        return m >> 64


def partial_shuffle(items: list, count: int, rng: SplitMix64) -> list:
    """First ``count`` entries of a Fisher-Yates shuffle of ``items``."""
    a = list(items)
    for i in range(count):
        j = i + rng.below(len(a) - i)
        a[i], a[j] = a[j], a[i]
    return a[:count]


@dataclass(frozen=True)
class EpisodeSpec:
    ways: int = 5
    shots: int = 1
    queries: int = 15
    episodes: int = 2000
    seed: int = 0

    def __post_init__(self):
        if min(self.ways, self.shots, self.queries, self.episodes) < 1:
            raise ValueError("ways, shots, queries and episodes must be positive")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def check(self, bank: FeatureBank) -> None:
        classes = bank.class_rows
        if self.ways > len(classes):
            raise DataError(f"{self.ways}-way episodes need {self.ways} classes, "
                            f"bank has {len(classes)}")
        smallest = min(len(r) for r in classes.values())
        if self.shots + self.queries > smallest:
            raise DataError(f"{self.shots}+{self.queries} samples per class exceed the "
                            f"smallest class size {smallest}")


def sample_indices(bank: FeatureBank, spec: EpisodeSpec, index: int):
    """Return ``(classes, support_rows, query_rows)`` for one episode.

    Rows are class-major in sampled-class order.
    """
    rng = SplitMix64(spec.seed ^ index)
    classes = partial_shuffle(bank.present_classes, spec.ways, rng)
    support, query = [], []
    for c in classes:
        rows = partial_shuffle(bank.class_rows[c].tolist(), spec.shots + spec.queries, rng)
        support.extend(rows[:spec.shots])
        query.extend(rows[spec.shots:])
    return tuple(classes), np.array(support, dtype=np.int64), np.array(query, dtype=np.int64)


def sample_episode(bank: FeatureBank, spec: EpisodeSpec, index: int) -> Episode:
    spec.check(bank)
    classes, s_rows, q_rows = sample_indices(bank, spec, index)
    feats = bank.features
    return Episode(
        support_views=feats[:, s_rows, :].astype(np.float64),
        support_labels=np.repeat(np.arange(spec.ways), spec.shots),
        query_views=feats[:, q_rows, :].astype(np.float64),
        query_labels=np.repeat(np.arange(spec.ways), spec.queries),
        k=spec.ways,
        n_shot=spec.shots,
        classes=classes,
        support_index=s_rows,
        query_index=q_rows,
        view_ids=tuple(v.id for v in bank.views),
    )


def iter_episodes(bank: FeatureBank, spec: EpisodeSpec):
    spec.check(bank)
    for i in range(spec.episodes):
        yield sample_episode(bank, spec, i)
