"""Episode-level classification heads.

* nearest prototype (VD),
* Power-LR: softmax regression with free biases,
* Voronoi-LR: softmax regression whose biases are tied to the weights as
  ``b_k = -|W_k|^2 / 4``, so its decision regions are the VD of ``W_k / 2``,
* the CIVD merge of prototype and LR centers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .episode import Episode
from .errors import DimensionError, TrainingError

__all__ = [
    "LinearModel",
    "TrainOptions",
    "prototypes",
    "init_model",
    "fit_linear",
    "train_power_lr",
    "train_voronoi_lr",
    "voronoi_bias",
    "lr_centers",
    "classify_linear",
    "classify_linear_many",
    "classify_civd_integrated",
    "classify_civd_integrated_many",
]

CONSTRAINT_TOL = 1e-9


@dataclass(frozen=True)
class LinearModel:
    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise DimensionError(f"bad model shapes W{self.W.shape} b{self.b.shape}")

    @property
    def n_classes(self) -> int:
        return self.W.shape[0]

    def logits(self, z) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) @ self.W.T + self.b

    def constraint_violation(self) -> float:
        return float(np.max(np.abs(self.b - voronoi_bias(self.W))))


@dataclass(frozen=True)
class TrainOptions:
    lr: float = 0.01
    batch_size: int = 64
    epochs: int = 100
    seed: int = 0
    init_scale: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not self.lr >= 0:
            raise ValueError("learning rate must be nonnegative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch size must be positive")


def prototypes(episode: Episode, view: int = 0) -> np.ndarray:
    """Per-class mean of the support features, shape ``(K, n)``."""
    return episode.support_by_class(view).mean(axis=1)


def voronoi_bias(W: np.ndarray) -> np.ndarray:
    return -0.25 * np.sum(W * W, axis=1)


def init_model(n_classes: int, dim: int, opts: TrainOptions,
               voronoi: bool = False) -> LinearModel:
    rng = np.random.default_rng(opts.seed)
    W = rng.uniform(-opts.init_scale, opts.init_scale, size=(n_classes, dim))
    b = voronoi_bias(W) if voronoi else np.zeros(n_classes)
    return LinearModel(W, b)


def _softmax(s: np.ndarray) -> np.ndarray:
    s = s - s.max(axis=1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=1, keepdims=True)


def fit_linear(X, y, n_classes: int, opts: TrainOptions = TrainOptions(),
               voronoi: bool = False) -> LinearModel:
    """Softmax regression on raw arrays; see :func:`train_voronoi_lr`."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    m, dim = X.shape
    model = init_model(n_classes, dim, opts, voronoi)
    W = model.W.copy()
    b = model.b.copy()
    # the init draw comes first so the model is reproducible from the seed alone
    rng = np.random.default_rng([opts.seed, 1])
    Y = np.eye(n_classes)[y]
    mW = np.zeros_like(W)
    vW = np.zeros_like(W)
    mb = np.zeros_like(b)
    vb = np.zeros_like(b)
    step = 0
    for epoch in range(opts.epochs):
        order = rng.permutation(m)
        for start in range(0, m, opts.batch_size):
            idx = order[start:start + opts.batch_size]
            xb, yb = X[idx], Y[idx]
            if voronoi:
                b = voronoi_bias(W)
            s = xb @ W.T + b
            p = _softmax(s)
            loss = -np.mean(np.log(np.maximum(np.sum(p * yb, axis=1), 1e-300)))
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}")
            g = (p - yb) / len(idx)
            gW = g.T @ xb
            gb = g.sum(axis=0)
            if voronoi:
                # chain rule through b_k = -|W_k|^2 / 4
                gW = gW - 0.5 * gb[:, None] * W
            step += 1
            c1 = 1.0 - opts.beta1 ** step
            c2 = 1.0 - opts.beta2 ** step
            mW = opts.beta1 * mW + (1 - opts.beta1) * gW
            vW = opts.beta2 * vW + (1 - opts.beta2) * gW * gW
            W = W - opts.lr * (mW / c1) / (np.sqrt(vW / c2) + opts.eps)
            if not voronoi:
                mb = opts.beta1 * mb + (1 - opts.beta1) * gb
                vb = opts.beta2 * vb + (1 - opts.beta2) * gb * gb
                b = b - opts.lr * (mb / c1) / (np.sqrt(vb / c2) + opts.eps)
            if not np.all(np.isfinite(W)):
                raise TrainingError(f"parameters diverged at epoch {epoch}")
    if voronoi:
        b = voronoi_bias(W)
    return LinearModel(W, b)


def _support_xy(episode: Episode, view: int) -> tuple[np.ndarray, np.ndarray]:
    return (np.asarray(episode.support_views[view], dtype=np.float64),
            np.asarray(episode.support_labels, dtype=np.int64))


def train_power_lr(episode: Episode, opts: TrainOptions = TrainOptions(),
                   view: int = 0) -> LinearModel:
    """Softmax regression with free biases, trained with Adam on the support set."""
    X, y = _support_xy(episode, view)
    return fit_linear(X, y, episode.k, opts, voronoi=False)


def train_voronoi_lr(episode: Episode, opts: TrainOptions = TrainOptions(),
                     view: int = 0) -> LinearModel:
    """Softmax regression with ``b`` recomputed from ``W`` before every forward pass.

    The bias is not a parameter: gradients reach ``W`` through both the
    linear term and the tied bias.
    """
    X, y = _support_xy(episode, view)
    return fit_linear(X, y, episode.k, opts, voronoi=True)


def lr_centers(model: LinearModel, tol: float = CONSTRAINT_TOL) -> np.ndarray:
    """Centers ``W_k / 2`` of the VD induced by a Voronoi-constrained model."""
    violation = model.constraint_violation()
    if violation >= tol:
        raise ValueError(f"model violates the Voronoi bias constraint by {violation:.3g}")
    return 0.5 * model.W


def classify_linear_many(model: LinearModel, queries) -> np.ndarray:
    return np.argmax(model.logits(np.atleast_2d(queries)), axis=1)


def classify_linear(model: LinearModel, z) -> int:
    return int(classify_linear_many(model, np.asarray(z)[None, :])[0])


def _merged_clusters(vd_centers, lr_cents) -> list[np.ndarray]:
    a = np.atleast_2d(np.asarray(vd_centers, dtype=np.float64))
    c = np.atleast_2d(np.asarray(lr_cents, dtype=np.float64))
    if a.shape != c.shape:
        raise DimensionError(f"center sets differ in shape: {a.shape} vs {c.shape}")
    return [np.stack([a[k], c[k]]) for k in range(a.shape[0])]


def classify_civd_integrated_many(vd_centers, lr_cents, queries, alpha: float = 1.0,
                                  metric: str = "sqeuclidean") -> np.ndarray:
    """Assign each query to the class whose cluster ``{c_k, c~_k}`` has maximal influence."""
    return geometry.assign_civd_many(_merged_clusters(vd_centers, lr_cents), queries,
                                     alpha, metric)


def classify_civd_integrated(vd_centers, lr_cents, z, alpha: float = 1.0,
                             metric: str = "sqeuclidean") -> int:
    return geometry.assign_civd(_merged_clusters(vd_centers, lr_cents), z, alpha, metric)
