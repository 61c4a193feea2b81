"""Seeded Gaussian feature banks standing in for CNN embeddings.

Novel and validation class centers can be built as sparse nonnegative
combinations of base centers, so that distances to base prototypes carry
class information. All outputs are labeled ``synthetic`` in their view
provenance.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .bank import FeatureBank, View


@dataclass(frozen=True)
class SyntheticSpec:
    n_base: int = 20
    n_novel: int = 10
    n_validation: int = 10
    dim: int = 64
    samples_per_class: int = 50
    dispersion: float = 1.0
    noise: float = 1.5
    outlier_rate: float = 0.0
    seed: int = 0
    n_views: int = 1
    view_jitter: float = 0.0
    novel_from_base: bool = True
    mix: int = 2
    shuffled_views: tuple = ()

    def __post_init__(self):
        counts = (self.n_base, self.n_novel, self.n_validation, self.dim,
                  self.samples_per_class, self.n_views, self.mix)
        if min(counts) < 1:
            raise ValueError("all counts must be at least 1")
        if not self.noise > 0:
            raise ValueError("noise scale must be positive")
        if not 0 <= self.outlier_rate <= 1:
            raise ValueError("outlier rate must lie in [0, 1]")
        if self.novel_from_base and self.mix > self.n_base:
            raise ValueError("mix exceeds the number of base classes")
        if any(not 0 <= v < self.n_views for v in self.shuffled_views):
            raise ValueError("shuffled view index out of range")
        object.__setattr__(self, "shuffled_views", tuple(self.shuffled_views))

    @classmethod
    def from_dict(cls, doc: dict) -> "SyntheticSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown synthetic spec keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["shuffled_views"] = list(self.shuffled_views)
        return d


def _derived_centers(rng, base, n, spec):
    if not spec.novel_from_base:
        return rng.normal(0.0, spec.dispersion, size=(n, spec.dim))
    out = np.empty((n, spec.dim))
    for i in range(n):
        pick = rng.choice(spec.n_base, size=spec.mix, replace=False)
        weights = rng.uniform(0.5, 1.0, size=spec.mix)
        out[i] = weights @ base[pick]
    return out


def _samples(rng, centers, spec):
    n_cls = centers.shape[0]
    per = spec.samples_per_class
    labels = np.repeat(np.arange(n_cls), per)
    scale = np.full(labels.shape[0], spec.noise)
    n_out = int(round(spec.outlier_rate * per))
    for c in range(n_cls):
        if n_out:
            rows = c * per + rng.choice(per, size=n_out, replace=False)
            scale[rows] = 5.0 * spec.noise
    x = centers[labels] + scale[:, None] * rng.normal(size=(labels.shape[0], spec.dim))
    views = [x]
    for v in range(1, spec.n_views):
        views.append(x + spec.view_jitter * rng.normal(size=x.shape))
    for v in spec.shuffled_views:
        views[v] = views[v][rng.permutation(x.shape[0])]
    return np.stack(views), labels


def gen_synthetic(spec: SyntheticSpec) -> tuple[FeatureBank, FeatureBank, FeatureBank]:
    """Return ``(base, novel, validation)`` banks for ``spec``."""
    rng = np.random.default_rng(spec.seed)
    base_c = rng.normal(0.0, spec.dispersion, size=(spec.n_base, spec.dim))
    novel_c = _derived_centers(rng, base_c, spec.n_novel, spec)
    val_c = _derived_centers(rng, base_c, spec.n_validation, spec)
    parts = [_samples(rng, c, spec) for c in (base_c, novel_c, val_c)]
    # one common shift keeps every split in the same space
    low = min(float(x.min()) for x, _ in parts)
    shift = max(0.0, spec.noise - low)
    views = []
    for v in range(spec.n_views):
        if v in spec.shuffled_views:
            prov = f"synthetic:shuffled{v}"
        elif v == 0:
            prov = "synthetic:clean"
        else:
            prov = f"synthetic:jitter{v}"
        views.append(View(v, prov))
    banks = []
    for (x, labels), n_cls, split in zip(parts, (spec.n_base, spec.n_novel, spec.n_validation),
                                         ("base", "novel", "validation")):
        banks.append(FeatureBank((x + shift).astype(np.float32), labels, n_cls,
                                 tuple(views), split))
    return tuple(banks)
