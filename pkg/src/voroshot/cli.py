"""Command line entry point: ``voroshot {gen,eval,render2d,bench}``.

Failures print one JSON object on stderr, e.g.
``{"error": "config", "exit": 1, "key": "banks.novel", "message": "..."}``,
and exit with 1 (configuration), 2 (data) or 3 (numeric domain).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, ensemble, pipeline
from .config import RunConfig, load_run_config, parse_run_config
from .data.io import save_bank, write_manifest
from .data.sampling import sample_episode
from .data.synthetic import SyntheticSpec, gen_synthetic
from .errors import ConfigError, DataError, DomainError, TrainingError
from .evaluation import EpisodeFailure
from .render import render_episode
from .surrogate import BasePrototypeCache

OUT_ENV = "VOROSHOT_OUT_DIR"
EXIT_CONFIG, EXIT_DATA, EXIT_DOMAIN = 1, 2, 3


def _load(args, check_files: bool = True) -> RunConfig:
    if args.config is None:
        cfg = parse_run_config({}, Path.cwd(), check_files)
    else:
        cfg = load_run_config(args.config, check_files)
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("seed must fit in 64 unsigned bits", key="--seed")
        cfg = replace(cfg, episodes=replace(cfg.episodes, seed=args.seed))
    if args.episodes is not None:
        if args.episodes < 1:
            raise ConfigError("must be positive", key="--episodes")
        cfg = replace(cfg, episodes=replace(cfg.episodes, episodes=args.episodes))
    out = args.out or os.environ.get(OUT_ENV)
    if out:
        cfg = replace(cfg, output_dir=Path(out))
    return cfg


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def cmd_gen(args) -> int:
    cfg = _load(args, check_files=False)
    spec = cfg.synthetic or SyntheticSpec()
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    suffix = ".txt" if cfg.format == "text" else ".vbk"
    splits = {}
    for name, bank in zip(("base", "novel", "validation"), gen_synthetic(spec)):
        fname = f"{name}{suffix}"
        save_bank(bank, out / fname, cfg.format)
        splits[name] = fname
    write_manifest(out / "manifest.json", "synthetic", splits,
                   "synthetic Gaussian classes; novel and validation centers mix base centers"
                   if spec.novel_from_base else "synthetic Gaussian classes",
                   generator=spec.to_dict())
    print(f"wrote {len(splits)} banks to {out}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load(args)
    report = pipeline.run_eval(cfg)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    report.save_json(out / "report.json")
    report.save_csv(out / "episodes.csv")
    print(f"{cfg.head}: accuracy {report.mean:.4f} +- {report.half_width:.4f} "
          f"over {len(report.accuracies)} episodes")
    return 0


def cmd_render2d(args) -> int:
    cfg = _load(args)
    r = cfg.render
    bank = pipeline.load_banks(cfg, [r.split])[r.split]
    if bank.dim != 2:
        raise DomainError(f"render2d needs a 2D bank, got dimension {bank.dim}", stage="render")
    ep = sample_episode(bank, cfg.episodes, r.episode)
    kwargs = {"opts": cfg.train, "alpha": cfg.alpha, "transform": r.transform}
    if r.partition == "ccvd":
        if cfg.pool is None:
            raise ConfigError("ccvd rendering needs a pool", key="pool")
        cache = None
        if any(not isinstance(h, ensemble.FeatureHead) for h in cfg.pool.heads):
            cache = BasePrototypeCache(pipeline.load_banks(cfg, ["base"])["base"])
        kwargs["pool"] = ensemble.build_pool(cfg.pool)
        kwargs["base"] = cache
    svg, grid, _ = render_episode(r.partition, ep, r.resolution, workers=cfg.workers, **kwargs)
    path = Path(args.svg) if args.svg else cfg.output_dir / "partition.svg"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg)
    print(f"wrote {r.partition} partition ({grid.shape[1]}x{grid.shape[0]}) to {path}")
    return 0


def cmd_bench(args) -> int:
    cfg = _load(args)
    doc = pipeline.run_bench(cfg)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "bench.json", doc)
    t = doc["total"]
    print(f"{doc['head']} L={doc['members']} episodes={doc['episodes']} "
          f"fit={t['fit']:.3f}s classify={t['classify']:.3f}s reduce={t['reduce']:.3f}s "
          f"total={doc['total_seconds']:.3f}s")
    return 0


COMMANDS = {"gen": cmd_gen, "eval": cmd_eval, "render2d": cmd_render2d, "bench": cmd_bench}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="voroshot",
                                     description="Voronoi few-shot classification toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "gen": "write synthetic base/novel/validation banks and a manifest",
        "eval": "evaluate the configured head over seeded episodes",
        "render2d": "render a 2D partition as SVG",
        "bench": "time member fitting, classification and reduction",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int, help="master seed, overrides the config")
        p.add_argument("--episodes", type=int, help="number of episodes, overrides the config")
        p.add_argument("--out", help=f"output directory (also ${OUT_ENV})")
        if name == "render2d":
            p.add_argument("--svg", help="SVG path; defaults to <out>/partition.svg")
    return parser


def _classify(exc: BaseException) -> tuple[str, int]:
    if isinstance(exc, EpisodeFailure):
        return _classify(exc.cause)
    if isinstance(exc, ConfigError):
        return "config", EXIT_CONFIG
    if isinstance(exc, (DataError, OSError)):
        return "data", EXIT_DATA
    if isinstance(exc, (DomainError, TrainingError, ValueError, ArithmeticError)):
        return "domain", EXIT_DOMAIN
    raise exc


def _report(exc: BaseException) -> int:
    kind, code = _classify(exc)
    doc = {"error": kind, "exit": code, "message": str(exc)}
    if isinstance(exc, ConfigError) and exc.key:
        doc["key"] = exc.key
    if isinstance(exc, EpisodeFailure):
        doc["episode"] = exc.index
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes
        return _report(exc)


if __name__ == "__main__":
    sys.exit(main())
