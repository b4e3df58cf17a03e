"""Command-line interface.

Subcommands: generate (ratio build), virtualize-test (fixed-size
virtualized set), evaluate (depth metrics over directory trees), stats
(channel statistics), inspect (dataset summary), and make-sample
(synthetic source data for trying the pipeline without real captures).

Flags override config-file values, which override defaults. Exit code
0 on success, 1 on any handled error, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import __version__
from .compositing import compute_channel_stats
from .config import ToolConfig, load_config
from .dataset import (
    DatasetManifest,
    audit_dataset,
    build_dataset,
    make_synthetic_source,
    virtualize_test_set,
)
from .errors import RgbdAugError
from .metrics import evaluate_directory
from .pngio import load_rgb_png


def _add_common_build_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--seed", type=int, help="global build seed")
    p.add_argument("--jobs", type=int, help="parallel worker count")
    p.add_argument("--coverage-min", type=float, help="minimum accepted coverage")
    p.add_argument("--coverage-max", type=float, help="maximum accepted coverage")
    p.add_argument("--p-color", type=float, help="probability a light is colored")
    p.add_argument("--p-shadow", type=float, help="probability a scene casts shadows")
    p.add_argument("--bg-distance", type=float, help="background plane distance, scene units")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rgbdaug",
        description="Deterministic virtual-object augmentation for RGB-D datasets",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build augmented copies of a source dataset")
    p.add_argument("--root", required=True, help="source dataset root")
    p.add_argument("--out", required=True, help="output dataset root")
    p.add_argument("--ratio", type=float, help="outputs per selected source image")
    p.add_argument("--source-fraction", type=float, help="fraction of sources used")
    _add_common_build_flags(p)

    p = sub.add_parser("virtualize-test", help="build a fixed-size virtualized set")
    p.add_argument("--root", required=True, help="source dataset root")
    p.add_argument("--out", required=True, help="output dataset root")
    p.add_argument("--target-count", type=int, help="number of outputs to keep")
    p.add_argument("--balanced", action="store_true",
                   help="cap per-source outputs at ceil(target/sources)")
    _add_common_build_flags(p)

    p = sub.add_parser("evaluate", help="depth metrics between two dataset trees")
    p.add_argument("--pred", required=True, help="predicted depth root")
    p.add_argument("--gt", required=True, help="ground-truth depth root")
    p.add_argument("--out", help="directory for metrics.csv and metrics.json")
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--min-depth", type=float, help="evaluation range minimum, meters")
    p.add_argument("--max-depth", type=float, help="evaluation range maximum, meters")
    p.add_argument("--eigen-crop", action="store_true",
                   help="restrict evaluation to the standard center crop")

    p = sub.add_parser("stats", help="channel statistics over a dataset's color images")
    p.add_argument("--root", required=True, help="dataset root")
    p.add_argument("--out", help="write stats JSON here instead of stdout")

    p = sub.add_parser("inspect", help="summarize a dataset or audit a build")
    p.add_argument("--root", required=True, help="dataset root")
    p.add_argument("--audit-against", metavar="SOURCE",
                   help="source root; verifies stored depth/color invariants")

    p = sub.add_parser("make-sample", help="write a synthetic source dataset")
    p.add_argument("--out", required=True, help="output dataset root")
    p.add_argument("--count", type=int, default=8, help="number of pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", default="640x480", help="WIDTHxHEIGHT, e.g. 640x480")

    return parser


def _effective_config(args) -> ToolConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ToolConfig()

    def override(obj, name, value):
        if value is not None:
            return dataclasses.replace(obj, **{name: value})
        return obj

    aug = cfg.augmentation
    cmin = getattr(args, "coverage_min", None)
    cmax = getattr(args, "coverage_max", None)
    if cmin is not None or cmax is not None:
        lo = cmin if cmin is not None else aug.coverage_bounds[0]
        hi = cmax if cmax is not None else aug.coverage_bounds[1]
        aug = dataclasses.replace(aug, coverage_bounds=(lo, hi))
    aug = override(aug, "p_colored_light", getattr(args, "p_color", None))
    aug = override(aug, "p_shadows", getattr(args, "p_shadow", None))
    aug = override(aug, "bg_distance", getattr(args, "bg_distance", None))
    cfg.augmentation = aug

    build = cfg.build
    build = override(build, "seed", getattr(args, "seed", None))
    build = override(build, "jobs", getattr(args, "jobs", None))
    build = override(build, "ratio", getattr(args, "ratio", None))
    build = override(build, "source_fraction", getattr(args, "source_fraction", None))
    build = override(build, "target_count", getattr(args, "target_count", None))
    if getattr(args, "balanced", False):
        build = dataclasses.replace(build, balanced=True)
    cfg.build = build

    ev = cfg.evaluation
    ev = override(ev, "min_depth", getattr(args, "min_depth", None))
    ev = override(ev, "max_depth", getattr(args, "max_depth", None))
    if getattr(args, "eigen_crop", False):
        ev = dataclasses.replace(ev, eigen_crop=True)
    cfg.evaluation = ev

    cfg.validate()
    return cfg


def _cmd_generate(args) -> int:
    cfg = _effective_config(args)
    report = build_dataset(
        args.root, args.out, cfg.augmentation,
        global_seed=cfg.build.seed, ratio=cfg.build.ratio,
        source_fraction=cfg.build.source_fraction, jobs=cfg.build.jobs,
        detail_tier=cfg.build.detail_tier, config_echo=cfg.to_dict(),
    )
    print(json.dumps({
        "out": args.out,
        "planned": report.payload["planned"],
        "accepted": report.payload["accepted"],
        "rejected": report.payload["rejected"],
    }, indent=2))
    return 0


def _cmd_virtualize_test(args) -> int:
    cfg = _effective_config(args)
    report = virtualize_test_set(
        args.root, args.out, cfg.augmentation,
        global_seed=cfg.build.seed, target_count=cfg.build.target_count,
        balanced=cfg.build.balanced, jobs=cfg.build.jobs,
        detail_tier=cfg.build.detail_tier, config_echo=cfg.to_dict(),
    )
    print(json.dumps({
        "out": args.out,
        "selected": report.payload["selected"],
        "waves_run": report.payload["waves_run"],
    }, indent=2))
    return 0


def _cmd_evaluate(args) -> int:
    cfg = _effective_config(args)
    report = evaluate_directory(args.pred, args.gt, cfg.evaluation)
    if args.out:
        from pathlib import Path

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report.write_csv(out / "metrics.csv")
        report.write_json(out / "metrics.json")
    print(json.dumps({
        "images": len(report.per_image),
        "missing_pred": len(report.missing_pred),
        **report.summary.to_dict(),
    }, indent=2))
    return 0


def _cmd_stats(args) -> int:
    manifest = DatasetManifest.load(args.root)
    images = (load_rgb_png(manifest.root / p.rel_rgb) for p in sorted(manifest.pairs))
    stats = compute_channel_stats(images)
    payload = {
        "mean": list(stats.mean), "std": list(stats.std),
        "pixel_count": stats.pixel_count,
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        from pathlib import Path

        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def _cmd_inspect(args) -> int:
    manifest = DatasetManifest.load(args.root)
    categories: dict = {}
    for p in manifest.pairs:
        categories[p.category] = categories.get(p.category, 0) + 1
    payload = {
        "root": str(manifest.root),
        "pairs": len(manifest.pairs),
        "categories": categories,
        "first": manifest.pairs[0].to_dict() if manifest.pairs else None,
    }
    if args.audit_against:
        payload["audit"] = audit_dataset(args.audit_against, args.root)
    print(json.dumps(payload, indent=2))
    return 0


def _cmd_make_sample(args) -> int:
    try:
        w, h = (int(v) for v in args.size.lower().split("x"))
    except ValueError:
        raise RgbdAugError(f"bad --size {args.size!r}, expected WIDTHxHEIGHT") from None
    manifest = make_synthetic_source(args.out, args.count, seed=args.seed, size=(h, w))
    print(json.dumps({"out": args.out, "pairs": len(manifest)}, indent=2))
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "virtualize-test": _cmd_virtualize_test,
    "evaluate": _cmd_evaluate,
    "stats": _cmd_stats,
    "inspect": _cmd_inspect,
    "make-sample": _cmd_make_sample,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except RgbdAugError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
