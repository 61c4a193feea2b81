"""The few-shot episode container."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

__all__ = ["Episode"]


@dataclass(frozen=True)
class Episode:
    """One K-way N-shot task.

    Features are stored per augmentation view: ``support_views`` has shape
    ``(V, K*N, n)`` and ``query_views`` ``(V, K*Q, n)``. Support rows are
    class-major (all of class 0, then class 1, ...). ``classes[k]`` is the bank
    class id behind episode label ``k``; ``support_index``/``query_index`` are
    the bank sample rows, when the episode was sampled from a bank, and
    ``view_ids`` the bank view id of each feature view.
    """

    support_views: np.ndarray
    support_labels: np.ndarray
    query_views: np.ndarray
    query_labels: np.ndarray | None
    k: int
    n_shot: int
    classes: tuple = ()
    support_index: np.ndarray | None = field(default=None, repr=False)
    query_index: np.ndarray | None = field(default=None, repr=False)
    view_ids: tuple = ()

    def __post_init__(self):
        sv, qv = self.support_views, self.query_views
        if sv.ndim != 3 or qv.ndim != 3:
            raise DataError("episode features must be (views, samples, dims) arrays")
        if sv.shape[0] != qv.shape[0] or sv.shape[2] != qv.shape[2]:
            raise DataError("support and query disagree on views or dimension")
        labels = np.asarray(self.support_labels)
        if labels.shape != (self.k * self.n_shot,):
            raise DataError(f"expected {self.k * self.n_shot} support labels, got {labels.shape}")
        counts = np.bincount(labels, minlength=self.k)
        if counts.shape[0] != self.k or np.any(counts != self.n_shot):
            raise DataError("every class needs exactly n_shot support samples")
        if np.any(np.diff(labels) < 0):
            raise DataError("support rows must be ordered by class")
        if not self.view_ids:
            object.__setattr__(self, "view_ids", tuple(range(sv.shape[0])))
        elif len(self.view_ids) != sv.shape[0]:
            raise DataError("one view id per feature view required")
        if self.query_labels is not None:
            ql = np.asarray(self.query_labels)
            if ql.shape != (qv.shape[1],) or np.any((ql < 0) | (ql >= self.k)):
                raise DataError("query labels out of range or miscounted")

    @classmethod
    def from_arrays(cls, support, support_labels, query, query_labels=None) -> "Episode":
        """Single-view episode; support rows are reordered class-major (stable)."""
        support = np.asarray(support, dtype=np.float64)
        query = np.asarray(query, dtype=np.float64)
        if query.ndim == 1:
            query = query[None, :]
        labels = np.asarray(support_labels, dtype=np.int64)
        order = np.argsort(labels, kind="stable")
        k = int(labels.max()) + 1
        return cls(
            support_views=support[order][None],
            support_labels=labels[order],
            query_views=query[None],
            query_labels=None if query_labels is None else np.asarray(query_labels, dtype=np.int64),
            k=k,
            n_shot=len(labels) // k,
        )

    @property
    def support(self) -> np.ndarray:
        return self.support_views[0]

    @property
    def query(self) -> np.ndarray:
        return self.query_views[0]

    @property
    def n_views(self) -> int:
        return self.support_views.shape[0]

    @property
    def dim(self) -> int:
        return self.support_views.shape[2]

    def view_pos(self, view_id: int) -> int:
        try:
            return self.view_ids.index(view_id)
        except ValueError:
            raise DataError(f"episode has no view {view_id}") from None

    def support_by_class(self, view: int = 0) -> np.ndarray:
        """Support features reshaped to ``(K, N, n)``."""
        return self.support_views[view].reshape(self.k, self.n_shot, self.dim)
