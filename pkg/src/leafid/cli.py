"""``leafid`` command-line front end."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import pipeline
from .errors import LeafIdError
from .features import ExtractionSettings, FeatureConfig, assemble_features, extract_groups, parse_configs
from .imaging import load_leaf, save_mask_png
from .pnn import DEFAULT_SIGMA, classify, load_model, save_model, train
from .vein import VEIN_RADII, save_tophat_png


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0: {text}")
    return v


def _count(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text}")
    return v


def _list(conv):
    def parse(text: str):
        try:
            return [conv(t) for t in text.split(",") if t.strip()]
        except argparse.ArgumentTypeError:
            raise
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc

    return parse


def _config(text: str) -> FeatureConfig:
    try:
        return FeatureConfig.parse(text)
    except LeafIdError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def default_cache_dir() -> Path:
    if os.environ.get("LEAFID_CACHE_DIR"):
        return Path(os.environ["LEAFID_CACHE_DIR"])
    base = os.environ.get("XDG_CACHE_HOME") or Path.home() / ".cache"
    return Path(base) / "leafid"


def _add_extraction(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("extraction")
    g.add_argument("--polarity", choices=["auto", "dark", "light"], default="auto",
                   help="which Otsu class is the leaf (auto: the one touching fewer border pixels)")
    g.add_argument("--max-side", type=_count, default=512,
                   help="downsample images so the longer side is at most this (default 512)")
    g.add_argument("--full-res", action="store_true", help="disable --max-side downsampling")
    g.add_argument("--no-pft-mask", action="store_true", help="run PFT over the raw grayscale image")
    g.add_argument("--color-full-image", action="store_true", help="colour moments over every pixel")
    g.add_argument("--levels", type=int, default=8, help="GLCM gray levels (default 8)")
    g.add_argument("--idm", choices=["squared", "standard"], default="squared",
                   help="IDM numerator: squared GLCM entry (default) or the usual homogeneity")
    g.add_argument("--correlation", choices=["product", "standard"], default="product",
                   help="correlation form: sum ij (p - mu_i mu_j) (default) or the usual Haralick form")
    g.add_argument("--vein-threshold", type=float, default=None,
                   help="fixed top-hat threshold instead of per-radius Otsu")
    g.add_argument("--dark-veins", action="store_true", help="use the black top-hat")


def _add_dataset(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", type=Path, help="directory with one subdirectory per class")
    src.add_argument("--manifest", type=Path, help="CSV with path,label[,split]")
    p.add_argument("--jobs", type=_count, default=os.cpu_count() or 1)
    p.add_argument("--cache-dir", type=Path, default=None,
                   help="feature cache directory (default $LEAFID_CACHE_DIR or ~/.cache/leafid)")
    p.add_argument("--no-cache", action="store_true")


def _add_protocol(p: argparse.ArgumentParser, sigma: bool = True) -> None:
    p.add_argument("--train", type=_count, default=40, help="training images per class")
    p.add_argument("--test", type=_count, default=10, help="test images per class")
    p.add_argument("--seed", type=int, default=1)
    if sigma:
        p.add_argument("--sigma", type=_positive_float, default=DEFAULT_SIGMA)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leafid", description="Leaf species identification")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="write the leaf mask as a 1-bit PNG")
    p.add_argument("--image", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--tophat", action="store_true", help="also write top-hat residues next to --out")
    _add_extraction(p)

    p = sub.add_parser("extract", help="write a feature CSV for a dataset")
    _add_dataset(p)
    p.add_argument("--config", type=_config, default=FeatureConfig.parse("full"))
    p.add_argument("--out", type=Path, required=True)
    _add_extraction(p)

    p = sub.add_parser("train", help="train a PNN and save it as JSON")
    _add_dataset(p)
    p.add_argument("--config", type=_config, default=FeatureConfig.parse("best-flavia"))
    p.add_argument("--sigma", type=_positive_float, default=DEFAULT_SIGMA)
    p.add_argument("--train", type=_count, default=None,
                   help="train on a seeded split of this many per class (default: every usable image)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", type=Path, required=True)
    _add_extraction(p)

    p = sub.add_parser("classify", help="classify one image with a saved model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--image", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None, help="optional JSON with the posterior")
    _add_extraction(p)

    p = sub.add_parser("evaluate", help="train/test accuracy report")
    _add_dataset(p)
    p.add_argument("--config", type=_config, default=FeatureConfig.parse("best-flavia"))
    _add_protocol(p)
    p.add_argument("--out", type=Path, required=True)
    _add_extraction(p)

    p = sub.add_parser("ablation", help="accuracy for several feature configs")
    _add_dataset(p)
    p.add_argument("--configs", default="table2", help="'table2' or ';'-separated configs")
    _add_protocol(p)
    p.add_argument("--out", type=Path, required=True)
    _add_extraction(p)

    p = sub.add_parser("sigma-sweep", help="accuracy versus smoothing factor")
    _add_dataset(p)
    p.add_argument("--config", type=_config, default=FeatureConfig.parse("best-flavia"))
    p.add_argument("--sigmas", type=_list(_positive_float), default=list(pipeline.DEFAULT_SIGMAS))
    _add_protocol(p, sigma=False)
    p.add_argument("--out", type=Path, required=True)
    _add_extraction(p)

    p = sub.add_parser("learning-curve", help="accuracy versus training-set size")
    _add_dataset(p)
    p.add_argument("--config", type=_config, default=FeatureConfig.parse("best-foliage"))
    p.add_argument("--sizes", type=_list(_count), required=True, help="comma-separated per-class sizes")
    p.add_argument("--test", type=_count, default=10)
    p.add_argument("--repeats", type=_count, default=5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--sigma", type=_positive_float, default=DEFAULT_SIGMA)
    p.add_argument("--out", type=Path, required=True)
    _add_extraction(p)
    return parser


def settings_from(args) -> ExtractionSettings:
    return ExtractionSettings(
        polarity=args.polarity,
        max_side=None if args.full_res else args.max_side,
        pft_mask=not args.no_pft_mask,
        color_mask=not args.color_full_image,
        levels=args.levels,
        idm=args.idm,
        correlation=args.correlation,
        vein_threshold=args.vein_threshold,
        dark_veins=args.dark_veins,
    )


def _load_dataset(args):
    manifest = pipeline.read_manifest(args.manifest) if args.manifest else pipeline.scan_dataset(args.data)
    cache = None if args.no_cache else (args.cache_dir or default_cache_dir())
    table = pipeline.extract_dataset(manifest, settings_from(args), jobs=args.jobs, cache_dir=cache)
    for path, err in sorted(table.failures.items()):
        print(f"excluded {path}: {err}")
    return manifest, table


def _prepare_out(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def cmd_segment(args) -> None:
    s = settings_from(args)
    leaf = load_leaf(args.image, polarity=s.polarity, max_side=s.max_side)
    save_mask_png(leaf.mask, _prepare_out(args.out))
    print(f"{args.image}: {int(leaf.mask.sum())} leaf pixels -> {args.out}")
    if args.tophat:
        for r in VEIN_RADII:
            dest = args.out.with_name(f"{args.out.stem}_tophat{r}.png")
            save_tophat_png(leaf.gray, leaf.mask, r, dest, dark_veins=s.dark_veins)
            print(f"top-hat radius {r} -> {dest}")


def cmd_extract(args) -> None:
    manifest, table = _load_dataset(args)
    pipeline.write_features_csv(table, manifest, args.config, _prepare_out(args.out))
    print(f"{len(table.groups)} leaves x {len(args.config)} features ({args.config}) -> {args.out}")


def _split_for(args, manifest, table, train_count, test_count):
    """Explicit counts split; otherwise reuse manifest split tags or train on everything."""
    usable = pipeline.usable(manifest, table)
    if train_count is None:
        if usable.subset("train"):
            return usable
        return pipeline.DatasetManifest(tuple(
            pipeline.Entry(e.path, e.label, "train") for e in usable.entries
        ))
    return pipeline.split_dataset(usable, train_count, test_count, args.seed)


def cmd_train(args) -> None:
    manifest, table = _load_dataset(args)
    split = _split_for(args, manifest, table, args.train, 0)
    x, y = table.matrix(split.subset("train"), args.config)
    model = train(x, y, sigma=args.sigma, feature_config=args.config.name)
    save_model(model, _prepare_out(args.out))
    print(f"trained {len(model.classes)} classes on {len(y)} leaves ({args.config}, sigma={args.sigma}) -> {args.out}")


def cmd_classify(args) -> None:
    model = load_model(args.model)
    config = FeatureConfig.parse(model.feature_config or "best-flavia")
    s = settings_from(args)
    leaf = load_leaf(args.image, polarity=s.polarity, max_side=s.max_side)
    result = classify(model, assemble_features(extract_groups(leaf, s), config))
    print(f"{args.image}: {result.label} (posterior {result.posterior[result.index]:.6f})")
    if args.out:
        doc = {
            "image": str(args.image),
            "label": result.label,
            "posterior": {c: float(p) for c, p in zip(model.classes, result.posterior)},
            "log_density": {c: float(v) for c, v in zip(model.classes, result.log_density)},
        }
        _prepare_out(args.out).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def cmd_evaluate(args) -> None:
    manifest, table = _load_dataset(args)
    split = pipeline.split_dataset(pipeline.usable(manifest, table), args.train, args.test, args.seed)
    _, report = pipeline.run_split(table, split, args.config, args.sigma)
    pipeline.write_report_csv([report], _prepare_out(args.out))
    print(f"{args.config}: accuracy {report.accuracy:.6f} ({report.n_r}/{report.n_t}) -> {args.out}")


def cmd_ablation(args) -> None:
    configs = parse_configs(args.configs)
    manifest, table = _load_dataset(args)
    reports = pipeline.ablation_grid(manifest, table, configs, args.train, args.test, args.seed, args.sigma)
    pipeline.write_ablation_csv(reports, _prepare_out(args.out))
    for rep in reports:
        print(f"{rep.accuracy:.6f}  {rep.config}")


def cmd_sigma_sweep(args) -> None:
    manifest, table = _load_dataset(args)
    curve = pipeline.sigma_sweep(manifest, table, args.config, args.sigmas, args.train, args.test, args.seed)
    pipeline.write_curve_csv(curve, ("sigma", "accuracy"), _prepare_out(args.out))
    for s, acc in curve:
        print(f"sigma={s:g}  accuracy={acc:.6f}")


def cmd_learning_curve(args) -> None:
    manifest, table = _load_dataset(args)
    curve = pipeline.learning_curve(
        manifest, table, args.config, args.sizes, args.test, args.repeats, args.seed, args.sigma
    )
    pipeline.write_curve_csv(curve, ("train_size", "mean_accuracy"), _prepare_out(args.out))
    for n, acc in curve:
        print(f"train={n}  mean accuracy={acc:.6f}")


COMMANDS = {
    "segment": cmd_segment,
    "extract": cmd_extract,
    "train": cmd_train,
    "classify": cmd_classify,
    "evaluate": cmd_evaluate,
    "ablation": cmd_ablation,
    "sigma-sweep": cmd_sigma_sweep,
    "learning-curve": cmd_learning_curve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except (LeafIdError, FileNotFoundError, ValueError) as exc:
        msg = str(exc)
        image = getattr(args, "image", None)
        if image is not None and str(image) not in msg:
            msg = f"{msg} ({image})"
        print(f"leafid {args.command}: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
