"""Rasterised SVG rendering of 2D partitions.

Cells are drawn per pixel: every pixel center is classified with the same
assignment kernels the classifiers use, and horizontal runs of equal class
become one ``<rect>``. Pixels where a configured transform is undefined are
left grey.
"""
from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from . import classifiers, ensemble, geometry, transforms
from .episode import Episode
from .errors import ConfigError, DomainError
from .surrogate import BasePrototypeCache
from .transforms import TransformParams

__all__ = [
    "PARTITIONS",
    "PALETTE",
    "UNDEFINED_COLOR",
    "Viewport",
    "viewport_for",
    "rasterize",
    "partition_classifier",
    "svg_document",
    "render_episode",
    "cell_colors",
]

PARTITIONS = ("vd", "pd", "civd", "ccvd")
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
UNDEFINED_COLOR = "#cccccc"
PAD = 0.2

PixelClassifier = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Viewport:
    xmin: float
    xmax: float
    ymin: float
    ymax: float
    width: int = 512
    height: int = 512

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigError("resolution must be positive")
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ConfigError("empty viewport")

    def pixel_center(self, i: int, j: int) -> tuple[float, float]:
        """Data coordinates of column ``i``, row ``j`` (row 0 is the top)."""
        x = self.xmin + (i + 0.5) * (self.xmax - self.xmin) / self.width
        y = self.ymax - (j + 0.5) * (self.ymax - self.ymin) / self.height
        return x, y

    def row_centers(self, j: int) -> np.ndarray:
        i = np.arange(self.width)
        x = self.xmin + (i + 0.5) * (self.xmax - self.xmin) / self.width
        y = self.ymax - (j + 0.5) * (self.ymax - self.ymin) / self.height
        return np.column_stack([x, np.full(self.width, y)])


def viewport_for(points, resolution: int = 512, pad: float = PAD) -> Viewport:
    """Bounding box of ``points`` padded by ``pad`` of its extent on each side."""
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if p.shape[1] != 2:
        raise DomainError(f"rendering needs 2D points, got dimension {p.shape[1]}",
                          stage="render")
    lo, hi = p.min(axis=0), p.max(axis=0)
    span = hi - lo
    # a degenerate extent (one center) still gets a unit-sized window
    span = np.where(span > 0, span, 1.0)
    lo, hi = lo - pad * span, hi + pad * span
    return Viewport(lo[0], hi[0], lo[1], hi[1], resolution, resolution)


def rasterize(classify: PixelClassifier, vp: Viewport, workers: int = 1) -> np.ndarray:
    """``(height, width)`` class grid; ``-1`` marks undefined pixels."""
    def row(j: int) -> np.ndarray:
        return np.asarray(classify(vp.row_centers(j)), dtype=np.int64)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, range(vp.height)))
    else:
        rows = [row(j) for j in range(vp.height)]
    return np.stack(rows)


def _defined(params: TransformParams, z: np.ndarray) -> np.ndarray:
    """Rows of ``z`` on which ``transforms.apply(params, .)`` is defined."""
    norm = np.linalg.norm(z, axis=1)
    ok = norm > 0
    y = params.w * z / np.where(ok, norm, 1.0)[:, None] + params.b
    lam = params.lam
    if lam == 0.0 or not float(lam).is_integer():
        ok &= np.all(y > 0, axis=1)
    elif lam < 0:
        ok &= np.all(y != 0, axis=1)
    return ok


def _masked(params: Sequence[TransformParams], fn: Callable) -> PixelClassifier:
    """Wrap ``fn`` so that it only sees pixels every transform accepts."""
    def classify(z: np.ndarray) -> np.ndarray:
        ok = np.ones(len(z), dtype=bool)
        for p in params:
            ok &= _defined(p, z)
        out = np.full(len(z), -1, dtype=np.int64)
        if ok.any():
            out[ok] = fn(z[ok])
        return out
    return classify


def partition_classifier(partition: str, episode: Episode, *,
                         transform: TransformParams | None = None,
                         opts: classifiers.TrainOptions = classifiers.TrainOptions(),
                         alpha: float = 1.0, pool: Sequence | None = None,
                         base: BasePrototypeCache | None = None):
    """Pixel classifier for one partition type, plus the raw points that frame it.

    ``vd`` uses the class prototypes, ``pd`` the power diagram of a Power-LR
    model (centers ``W/2``, weights ``b + |W|^2/4``), ``civd`` the clusters
    ``{prototype, W/2}`` of a Voronoi-LR model and ``ccvd`` the ensemble over
    ``pool``, with every pixel pushed through each configuration's transform.
    ``transform=None`` classifies raw coordinates, which is what a 2D picture
    of the partition usually wants.
    """
    if episode.dim != 2:
        raise DomainError(f"rendering needs 2D features, got dimension {episode.dim}",
                          stage="render")
    if partition not in PARTITIONS:
        raise ConfigError(f"unknown partition {partition!r}")
    raw = episode.support_views[0]
    if partition == "ccvd":
        cfgs = tuple(pool) if pool else (
            ensemble.Config(transform=transform or transforms.IDENTITY),)
        model = ensemble.fit_members(cfgs, episode, base)

        def fn(z: np.ndarray) -> np.ndarray:
            d = np.stack([m.distances(transforms.apply(c.transform, z))
                          for m, c in zip(model.members, cfgs)])
            return np.argmax(geometry.ccvd_scores(d, alpha), axis=1)
        return _masked([c.transform for c in cfgs], fn), raw

    def tf(z: np.ndarray) -> np.ndarray:
        return z if transform is None else transforms.apply(transform, z)

    tlist = [] if transform is None else [transform]
    s = tf(raw)
    protos = s.reshape(episode.k, episode.n_shot, -1).mean(axis=1)
    # centers only frame the picture when they live in pixel space
    frame = (lambda c: np.vstack([raw, c])) if transform is None else (lambda c: raw)
    if partition == "vd":
        return _masked(tlist, lambda z: geometry.assign_vd_many(protos, tf(z))), frame(protos)
    if partition == "pd":
        model = classifiers.fit_linear(s, episode.support_labels, episode.k, opts, False)
        centers = 0.5 * model.W
        weights = model.b + 0.25 * np.sum(model.W ** 2, axis=1)
        return (_masked(tlist, lambda z: geometry.assign_pd_many(centers, weights, tf(z))),
                frame(np.vstack([protos, centers])))
    model = classifiers.fit_linear(s, episode.support_labels, episode.k, opts, True)
    lr = classifiers.lr_centers(model)
    return (_masked(tlist, lambda z: classifiers.classify_civd_integrated_many(
        protos, lr, tf(z), alpha)), frame(np.vstack([protos, lr])))


def _runs(row: np.ndarray):
    start = 0
    for i in range(1, len(row) + 1):
        if i == len(row) or row[i] != row[start]:
            yield start, i - start, int(row[start])
            start = i


def _color(label: int) -> str:
    return UNDEFINED_COLOR if label < 0 else PALETTE[label % len(PALETTE)]


def svg_document(grid: np.ndarray, vp: Viewport, support=None, support_labels=None,
                 title: str = "") -> str:
    """SVG 1.1 document with one pixel per user unit."""
    h, w = grid.shape
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" shape-rendering="crispEdges">',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append('<g id="cells">')
    for j in range(h):
        for i, length, lab in _runs(grid[j]):
            out.append(f'<rect class="cell" x="{i}" y="{j}" width="{length}" height="1" '
                       f'fill="{_color(lab)}" data-class="{lab}"/>')
    out.append("</g>")
    if support is not None:
        pts = np.atleast_2d(np.asarray(support, dtype=np.float64))
        labs = np.asarray(support_labels, dtype=np.int64)
        size = max(4, min(w, h) // 64)
        out.append('<g id="support">')
        for (x, y), lab in zip(pts, labs):
            px = (x - vp.xmin) / (vp.xmax - vp.xmin) * w
            py = (vp.ymax - y) / (vp.ymax - vp.ymin) * h
            out.append(f'<rect class="support" x="{px - size / 2:.2f}" y="{py - size / 2:.2f}" '
                       f'width="{size}" height="{size}" fill="{_color(int(lab))}" '
                       f'stroke="#000000" stroke-width="1"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cell_colors(svg: str) -> set:
    """Distinct fill colors of the partition cells in a rendered document."""
    return set(re.findall(r'<rect class="cell"[^>]*fill="(#[0-9a-f]{6})"', svg))


def render_episode(partition: str, episode: Episode, resolution: int = 512,
                   workers: int = 1, **kwargs) -> tuple[str, np.ndarray, Viewport]:
    """Render one episode; returns the SVG text, the class grid and the viewport."""
    classify, frame = partition_classifier(partition, episode, **kwargs)
    vp = viewport_for(frame, resolution)
    grid = rasterize(classify, vp, workers)
    svg = svg_document(grid, vp, episode.support_views[0], episode.support_labels,
                       title=f"{partition} partition")
    return svg, grid, vp
