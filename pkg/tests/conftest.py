from __future__ import annotations

import numpy as np
import pytest

from voroshot.data import EpisodeSpec, FeatureBank, SyntheticSpec, View, gen_synthetic
from voroshot.episode import Episode

SMALL = SyntheticSpec(n_base=10, n_novel=8, n_validation=6, dim=16, samples_per_class=20,
                      seed=7, n_views=2, view_jitter=0.3)


@pytest.fixture(scope="session")
def small_banks():
    return gen_synthetic(SMALL)


@pytest.fixture(scope="session")
def small_spec():
    return EpisodeSpec(ways=5, shots=2, queries=5, episodes=20, seed=3)


def random_episode(rng, k=4, n_shot=2, q=6, dim=8, positive=True) -> Episode:
    """Episode drawn from well-separated Gaussian classes."""
    centers = rng.normal(size=(k, dim)) * 3
    support = np.concatenate([c + rng.normal(size=(n_shot, dim)) for c in centers])
    query = np.concatenate([c + rng.normal(size=(q, dim)) for c in centers])
    if positive:
        shift = 1.0 - min(support.min(), query.min())
        support, query = support + shift, query + shift
    return Episode.from_arrays(support, np.repeat(np.arange(k), n_shot), query,
                               np.repeat(np.arange(k), q))


def toy_bank(n_classes=20, per_class=6, dim=4, seed=0, split="novel") -> FeatureBank:
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(n_classes), per_class)
    feats = rng.uniform(1, 2, size=(1, len(labels), dim))
    return FeatureBank(feats, labels, n_classes, (View(0, "toy"),), split)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
