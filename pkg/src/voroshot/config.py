"""JSON run configurations.

A run configuration is one JSON object. Relative paths are resolved against
the directory holding the file. Every problem is reported as a
:class:`ConfigError` naming the dotted key at fault. Recognised keys::

    banks            {"base": path, "novel": path, "validation": path}
    episodes         {"ways", "shots", "queries", "count", "seed"}
    head             vd | power_lr | voronoi_lr | civd | surrogate | ensemble
    transform        {"w", "b", "lambda"}
    view             bank view id used by single-config heads
    train            Adam options for the linear heads
    civd             {"lr_head": "voronoi_lr" | "power_lr"}
    alpha            influence exponent (nonzero)
    surrogate        {"R", "beta", "gamma"}; R and beta may be lists (grid)
    pool             {"views": [...], "transforms": [...], "heads": [...]}
    scheme           {"kind": "full"} | {"kind": "random", "size", "seed"}
                     | {"kind": "guided"}
    validation_episodes  episodes drawn from the validation bank for grids
    render           {"partition", "resolution", "episode", "split", "transform"};
                     without a transform the picture shows raw coordinates
    synthetic        generator parameters for ``gen``
    format           bank format written by ``gen``: binary | text
    output_dir       where reports go
    workers          threads for episode evaluation
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .classifiers import TrainOptions
from .data.sampling import EpisodeSpec
from .data.synthetic import SyntheticSpec
from .ensemble import FeatureHead, PoolSpec, SurrogateHead
from .errors import ConfigError
from .render import PARTITIONS
from .surrogate import SurrogateParams
from .transforms import IDENTITY, TransformParams, parse_transform

__all__ = ["HEADS", "SCHEMES", "RunConfig", "load_run_config", "parse_run_config"]

HEADS = ("vd", "power_lr", "voronoi_lr", "civd", "surrogate", "ensemble")
SCHEMES = ("full", "random", "guided")
SPLITS = ("base", "novel", "validation")


@dataclass(frozen=True)
class SurrogateGrid:
    Rs: tuple
    betas: tuple
    gamma: float = 1.0

    @property
    def is_grid(self) -> bool:
        return len(self.Rs) > 1 or len(self.betas) > 1


@dataclass(frozen=True)
class Scheme:
    kind: str = "full"
    size: int | None = None
    seed: int = 0


@dataclass(frozen=True)
class RenderOptions:
    partition: str = "vd"
    resolution: int = 512
    episode: int = 0
    split: str = "novel"
    transform: TransformParams | None = None


@dataclass(frozen=True)
class RunConfig:
    banks: dict = field(default_factory=dict)
    episodes: EpisodeSpec = EpisodeSpec()
    head: str = "vd"
    transform: TransformParams = IDENTITY
    view: int = 0
    train: TrainOptions = TrainOptions()
    civd_lr_head: str = "voronoi_lr"
    alpha: float = 1.0
    surrogate: SurrogateGrid = SurrogateGrid((1,), (1.0,), 1.0)
    pool: PoolSpec | None = None
    pool_surrogate_grid: bool = False
    scheme: Scheme = Scheme()
    validation_episodes: int = 200
    render: RenderOptions = RenderOptions()
    synthetic: SyntheticSpec | None = None
    format: str = "binary"
    output_dir: Path = Path("out")
    workers: int = 1

    def bank_path(self, split: str) -> Path:
        if split not in self.banks:
            raise ConfigError("missing bank path", key=f"banks.{split}")
        return self.banks[split]

    def describe(self) -> dict:
        """JSON-ready summary of what was run, for reports."""
        d: dict[str, Any] = {
            "head": self.head,
            "transform": self.transform.to_dict(),
            "view": self.view,
            "alpha": self.alpha,
            "banks": {k: str(v) for k, v in sorted(self.banks.items())},
        }
        if self.head in ("power_lr", "voronoi_lr", "civd"):
            d["train"] = {f.name: getattr(self.train, f.name) for f in fields(self.train)}
        if self.head == "civd":
            d["lr_head"] = self.civd_lr_head
        if self.head in ("surrogate", "ensemble"):
            d["surrogate"] = {"R": list(self.surrogate.Rs), "beta": list(self.surrogate.betas),
                              "gamma": self.surrogate.gamma}
        if self.head == "ensemble":
            d["scheme"] = {"kind": self.scheme.kind, "size": self.scheme.size,
                           "seed": self.scheme.seed}
        return d


def _get(doc: dict, key: str, kind, default=None, path: str = "", required: bool = False):
    name = f"{path}{key}"
    if key not in doc:
        if required:
            raise ConfigError("missing required key", key=name)
        return default
    value = doc[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind in (int, float) and isinstance(value, bool)):
        raise ConfigError(f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}",
                          key=name)
    return value


def _section(doc: dict, key: str) -> dict:
    value = doc.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError("expected an object", key=key)
    return value


def _transform(obj, key: str) -> TransformParams:
    if not isinstance(obj, dict):
        raise ConfigError("expected an object with w, b, lambda", key=key)
    unknown = set(obj) - {"w", "b", "lambda", "lam"}
    if unknown:
        raise ConfigError(f"unknown fields {sorted(unknown)}", key=key)
    try:
        return parse_transform(obj)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), key=key) from None


def _as_list(value, key: str, kind) -> tuple:
    items = value if isinstance(value, list) else [value]
    if not items:
        raise ConfigError("grid must be nonempty", key=key)
    out = []
    for v in items:
        if kind is float and isinstance(v, int) and not isinstance(v, bool):
            v = float(v)
        if not isinstance(v, kind) or isinstance(v, bool):
            raise ConfigError(f"expected {kind.__name__} values", key=key)
        out.append(v)
    return tuple(out)


def _episodes(doc: dict) -> EpisodeSpec:
    sec = _section(doc, "episodes")
    known = {"ways", "shots", "queries", "count", "seed"}
    unknown = set(sec) - known
    if unknown:
        raise ConfigError(f"unknown fields {sorted(unknown)}", key="episodes")
    kw = {
        "ways": _get(sec, "ways", int, 5, "episodes."),
        "shots": _get(sec, "shots", int, 1, "episodes."),
        "queries": _get(sec, "queries", int, 15, "episodes."),
        "episodes": _get(sec, "count", int, 2000, "episodes."),
        "seed": _get(sec, "seed", int, 0, "episodes."),
    }
    try:
        return EpisodeSpec(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc), key="episodes") from None


def _train(doc: dict) -> TrainOptions:
    sec = _section(doc, "train")
    names = {f.name: f.type for f in fields(TrainOptions)}
    unknown = set(sec) - set(names)
    if unknown:
        raise ConfigError(f"unknown fields {sorted(unknown)}", key="train")
    kw = {}
    for name in sec:
        kind = int if name in ("batch_size", "epochs", "seed") else float
        kw[name] = _get(sec, name, kind, path="train.")
    try:
        return TrainOptions(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc), key="train") from None


def _surrogate(doc: dict) -> SurrogateGrid:
    sec = _section(doc, "surrogate")
    Rs = _as_list(sec.get("R", 1), "surrogate.R", int)
    betas = _as_list(sec.get("beta", 1.0), "surrogate.beta", float)
    gamma = _get(sec, "gamma", float, 1.0, "surrogate.")
    try:
        for R in Rs:
            for b in betas:
                SurrogateParams(R, b, gamma)
    except ValueError as exc:
        raise ConfigError(str(exc), key="surrogate") from None
    return SurrogateGrid(Rs, tuple(sorted(betas)), gamma)


def _pool(doc: dict) -> tuple[PoolSpec | None, bool]:
    if "pool" not in doc:
        return None, False
    sec = _section(doc, "pool")
    views = _as_list(sec.get("views", [0]), "pool.views", int)
    raw_t = sec.get("transforms", [{}])
    if not isinstance(raw_t, list) or not raw_t:
        raise ConfigError("expected a nonempty list", key="pool.transforms")
    ts = tuple(_transform(t, f"pool.transforms[{i}]") for i, t in enumerate(raw_t))
    raw_h = sec.get("heads", ["feature"])
    if not isinstance(raw_h, list) or not raw_h:
        raise ConfigError("expected a nonempty list", key="pool.heads")
    heads = []
    grid = False
    for i, h in enumerate(raw_h):
        key = f"pool.heads[{i}]"
        if h == "feature":
            heads.append(FeatureHead())
        elif h == "surrogate_grid":
            # expanded later, once the validation grid has picked beta per R
            grid = True
        elif isinstance(h, dict) and h.get("kind") == "surrogate":
            try:
                heads.append(SurrogateHead(SurrogateParams(
                    int(h.get("R", 1)), float(h.get("beta", 1.0)), float(h.get("gamma", 1.0)))))
            except (TypeError, ValueError) as exc:
                raise ConfigError(str(exc), key=key) from None
        else:
            raise ConfigError(f"unknown head {h!r}", key=key)
    return PoolSpec(views, ts, tuple(heads)), grid


def _scheme(doc: dict) -> Scheme:
    sec = _section(doc, "scheme")
    kind = _get(sec, "kind", str, "full", "scheme.")
    if kind not in SCHEMES:
        raise ConfigError(f"unknown scheme {kind!r}", key="scheme.kind")
    size = _get(sec, "size", int, None, "scheme.", required=kind == "random")
    if size is not None and size < 1:
        raise ConfigError("subset size must be positive", key="scheme.size")
    return Scheme(kind, size, _get(sec, "seed", int, 0, "scheme."))


def _render(doc: dict) -> RenderOptions:
    sec = _section(doc, "render")
    r = RenderOptions(
        partition=_get(sec, "partition", str, "vd", "render."),
        resolution=_get(sec, "resolution", int, 512, "render."),
        episode=_get(sec, "episode", int, 0, "render."),
        split=_get(sec, "split", str, "novel", "render."),
        transform=(_transform(sec["transform"], "render.transform")
                   if "transform" in sec else None),
    )
    if r.partition not in PARTITIONS:
        raise ConfigError(f"unknown partition {r.partition!r}", key="render.partition")
    if r.resolution < 1:
        raise ConfigError("resolution must be positive", key="render.resolution")
    if r.split not in SPLITS:
        raise ConfigError(f"unknown split {r.split!r}", key="render.split")
    return r


def _banks(doc: dict, root: Path, check: bool) -> dict:
    sec = _section(doc, "banks")
    out = {}
    for split, value in sec.items():
        key = f"banks.{split}"
        if split not in SPLITS:
            raise ConfigError("unknown split", key=key)
        if not isinstance(value, str) or not value:
            raise ConfigError("expected a path", key=key)
        path = Path(value)
        path = path if path.is_absolute() else root / path
        if check and not path.exists():
            raise ConfigError(f"file not found: {path}", key=key)
        out[split] = path
    return out


def parse_run_config(doc: dict, root: Path | str = ".", check_files: bool = True) -> RunConfig:
    """Validate a decoded JSON document; relative paths resolve against ``root``."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    root = Path(root)
    head = _get(doc, "head", str, "vd")
    if head not in HEADS:
        raise ConfigError(f"unknown head {head!r}", key="head")
    lr_head = _get(_section(doc, "civd"), "lr_head", str, "voronoi_lr", "civd.")
    if lr_head not in ("power_lr", "voronoi_lr"):
        raise ConfigError(f"unknown linear head {lr_head!r}", key="civd.lr_head")
    alpha = _get(doc, "alpha", float, 1.0)
    if alpha == 0:
        raise ConfigError("influence exponent must be nonzero", key="alpha")
    fmt = _get(doc, "format", str, "binary")
    if fmt not in ("binary", "text"):
        raise ConfigError(f"unknown bank format {fmt!r}", key="format")
    synthetic = None
    if "synthetic" in doc:
        try:
            synthetic = SyntheticSpec.from_dict(_section(doc, "synthetic"))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), key="synthetic") from None
    pool, pool_grid = _pool(doc)
    if head == "ensemble" and pool is None:
        raise ConfigError("ensemble head needs a pool", key="pool")
    cfg = RunConfig(
        banks=_banks(doc, root, check_files),
        episodes=_episodes(doc),
        head=head,
        transform=_transform(doc.get("transform", {}), "transform"),
        view=_get(doc, "view", int, 0),
        train=_train(doc),
        civd_lr_head=lr_head,
        alpha=alpha,
        surrogate=_surrogate(doc),
        pool=pool,
        pool_surrogate_grid=pool_grid,
        scheme=_scheme(doc),
        validation_episodes=_get(doc, "validation_episodes", int, 200),
        render=_render(doc),
        synthetic=synthetic,
        format=fmt,
        output_dir=root / _get(doc, "output_dir", str, "out"),
        workers=_get(doc, "workers", int, 1),
    )
    if cfg.validation_episodes < 1:
        raise ConfigError("must be positive", key="validation_episodes")
    if cfg.workers < 1:
        raise ConfigError("must be positive", key="workers")
    if pool is not None and not pool.heads and not pool_grid:
        raise ConfigError("no heads", key="pool.heads")
    return cfg


def load_run_config(path, check_files: bool = True) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}", key="config") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}: {exc.msg}", key="config") from None
    return parse_run_config(doc, path.parent, check_files)
