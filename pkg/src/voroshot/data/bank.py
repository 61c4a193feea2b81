"""Immutable labeled feature matrix with per-sample augmentation views."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import DataError

SPLITS = ("base", "novel", "validation")


@dataclass(frozen=True)
class View:
    id: int
    provenance: str = "identity"

    def __post_init__(self):
        if not self.provenance or any(c in self.provenance for c in "\r\n"):
            raise DataError(f"view {self.id}: provenance must be a nonempty single line")


@dataclass(frozen=True, eq=False)
class FeatureBank:
    """Features of shape ``(n_views, n_samples, n_dims)``, stored as float32.

    Every view shares the sample order and hence ``labels``.
    """

    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    views: tuple
    split: str = "novel"

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float32)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if feats.ndim != 3:
            raise DataError(f"features must be (views, samples, dims), got shape {feats.shape}")
        n_views, n_samples, n_dims = feats.shape
        if n_samples == 0 or n_dims == 0 or n_views == 0:
            raise DataError("bank needs at least one view, sample and dimension")
        if labels.shape != (n_samples,):
            raise DataError(f"{labels.shape[0]} labels for {n_samples} samples")
        if self.n_classes < 1 or np.any(labels < 0) or np.any(labels >= self.n_classes):
            raise DataError(f"labels must lie in [0, {self.n_classes})")
        if len(self.views) != n_views:
            raise DataError(f"{len(self.views)} view descriptors for {n_views} feature views")
        ids = [v.id for v in self.views]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate view ids")
        if self.split not in SPLITS:
            raise DataError(f"unknown split tag {self.split!r}")
        if not np.all(np.isfinite(feats)):
            raise DataError("bank contains NaN or infinite entries")
        feats.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "views", tuple(self.views))

    @property
    def n_views(self) -> int:
        return self.features.shape[0]

    @property
    def n_samples(self) -> int:
        return self.features.shape[1]

    @property
    def dim(self) -> int:
        return self.features.shape[2]

    @cached_property
    def class_rows(self) -> dict[int, np.ndarray]:
        """Sample rows of each class present in the bank, in sample order."""
        return {int(c): np.flatnonzero(self.labels == c) for c in np.unique(self.labels)}

    @property
    def present_classes(self) -> list[int]:
        return sorted(self.class_rows)

    def view_position(self, view_id: int) -> int:
        for pos, v in enumerate(self.views):
            if v.id == view_id:
                return pos
        raise DataError(f"view {view_id} not in bank (have {[v.id for v in self.views]})")

    def view_features(self, view_id: int) -> np.ndarray:
        return self.features[self.view_position(view_id)]

    def same_as(self, other: "FeatureBank") -> bool:
        return (
            self.n_classes == other.n_classes
            and self.split == other.split
            and self.views == other.views
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.features, other.features)
        )
