"""Datasets, train/test protocol, evaluation and the experiment drivers."""

from __future__ import annotations

import csv
import hashlib
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ClassWithNoImages,
    DimensionMismatch,
    EmptyDataset,
    InsufficientImages,
    LeafIdError,
    NonPositiveSigma,
)
from .features import (
    GROUP_ORDER,
    ExtractionSettings,
    FeatureConfig,
    assemble_features,
    extract_file,
    feature_names,
)
from .imaging import SUPPORTED_SUFFIXES
from .pnn import DEFAULT_SIGMA, PnnModel, classify_many, train

log = logging.getLogger(__name__)

SPLITS = ("train", "test", "unassigned")
DEFAULT_SIGMAS = (1e-4, 1e-3, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 10.0)


@dataclass(frozen=True)
class Entry:
    path: str
    label: str
    split: str = "unassigned"


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[Entry, ...]

    def __post_init__(self):
        paths = [e.path for e in self.entries]
        if len(set(paths)) != len(paths):
            raise ValueError("duplicate paths in manifest")

    def __len__(self):
        return len(self.entries)

    @property
    def labels(self) -> list[str]:
        return sorted({e.label for e in self.entries})

    def by_class(self) -> dict[str, list[Entry]]:
        out: dict[str, list[Entry]] = {}
        for e in sorted(self.entries, key=lambda e: (e.label, e.path)):
            out.setdefault(e.label, []).append(e)
        return out

    def subset(self, split: str) -> list[Entry]:
        return [e for e in self.entries if e.split == split]

    def without(self, paths: Iterable[str]) -> "DatasetManifest":
        drop = set(paths)
        return DatasetManifest(tuple(e for e in self.entries if e.path not in drop))


def scan_dataset(root) -> DatasetManifest:
    """One entry per image under ``root/<class>/``; label = directory name."""
    root = Path(root)
    if not root.is_dir():
        raise EmptyDataset(f"{root} is not a directory")
    entries = []
    for cls_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        images = sorted(
            p for p in cls_dir.iterdir() if p.is_file() and p.suffix.lower() in SUPPORTED_SUFFIXES
        )
        if not images:
            raise ClassWithNoImages(f"class directory {cls_dir} has no images")
        entries += [Entry(str(p), cls_dir.name) for p in images]
    if not entries:
        raise EmptyDataset(f"no class directories under {root}")
    return DatasetManifest(tuple(entries))


def read_manifest(path) -> DatasetManifest:
    """Read a ``path,label,split`` CSV; relative paths resolve against its folder."""
    path = Path(path)
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"path", "label"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: manifest needs a path,label[,split] header")
        for row in reader:
            p = Path(row["path"])
            if not p.is_absolute():
                p = path.parent / p
            split = (row.get("split") or "unassigned").strip()
            if split not in SPLITS:
                raise ValueError(f"{path}: unknown split {split!r}")
            entries.append(Entry(str(p), row["label"].strip(), split))
    if not entries:
        raise EmptyDataset(f"{path} lists no images")
    return DatasetManifest(tuple(entries))


def write_manifest(manifest: DatasetManifest, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "label", "split"])
        for e in manifest.entries:
            if "," in e.path:
                raise ValueError(f"path contains a comma: {e.path}")
            w.writerow([e.path, e.label, e.split])


def split_dataset(manifest: DatasetManifest, train_per_class: int, test_per_class: int, seed: int) -> DatasetManifest:
    """Seeded per-class shuffle; the first ``train_per_class`` go to train, the next ``test_per_class`` to test.

    Classes are visited in sorted order and members sorted by path before
    shuffling, so the result does not depend on manifest order.
    """
    if train_per_class < 1 or test_per_class < 0:
        raise ValueError("train count must be >= 1 and test count >= 0")
    rng = np.random.default_rng(seed)
    out = []
    for label, members in manifest.by_class().items():
        need = train_per_class + test_per_class
        if len(members) < need:
            raise InsufficientImages(f"class {label!r} has {len(members)} images, needs {need}")
        order = rng.permutation(len(members))
        for rank, k in enumerate(order):
            split = "train" if rank < train_per_class else "test" if rank < need else "unassigned"
            out.append(replace(members[k], split=split))
    return DatasetManifest(tuple(sorted(out, key=lambda e: (e.label, e.path))))


# -- feature extraction & cache ----------------------------------------------


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def cache_path(cache_dir, settings: ExtractionSettings) -> Path:
    return Path(cache_dir) / f"features-{settings.fingerprint()}.csv"


def load_cache(path) -> dict[tuple[str, str], dict[str, np.ndarray]]:
    """``(path, sha256) -> {group: values}`` from a feature cache CSV."""
    out: dict[tuple[str, str], dict[str, np.ndarray]] = {}
    path = Path(path)
    if not path.is_file():
        return out
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for row in reader:
            p, digest, group, *values = row
            out.setdefault((p, digest), {})[group] = np.array([float(v) for v in values])
    return out


def save_cache(path, cache: dict[tuple[str, str], dict[str, np.ndarray]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "sha256", "group", "values"])
        for (p, digest), groups in sorted(cache.items()):
            for g in GROUP_ORDER:
                w.writerow([p, digest, g, *(repr(float(v)) for v in groups[g])])
    os.replace(tmp, path)


def _extract_one(args):
    path, settings = args
    try:
        return path, extract_file(path, settings), None
    except (LeafIdError, FileNotFoundError) as exc:
        return path, None, f"{type(exc).__name__}: {exc}"


@dataclass
class FeatureTable:
    """Extracted groups per image path, plus the images that failed."""

    groups: dict[str, dict[str, np.ndarray]]
    failures: dict[str, str] = field(default_factory=dict)

    def matrix(self, entries: Sequence[Entry], config: FeatureConfig) -> tuple[np.ndarray, list[str]]:
        x = np.array([assemble_features(self.groups[e.path], config) for e in entries])
        return x.reshape(len(entries), len(config)), [e.label for e in entries]


def extract_dataset(
    manifest: DatasetManifest,
    settings: ExtractionSettings = ExtractionSettings(),
    jobs: int = 1,
    cache_dir=None,
) -> FeatureTable:
    """Extract every feature group for every image, reusing the cache when given.

    Images whose extraction raises a leafid error are recorded in
    ``failures`` instead of aborting the run.
    """
    paths = sorted(e.path for e in manifest.entries)
    cache_file = cache_path(cache_dir, settings) if cache_dir else None
    cache = load_cache(cache_file) if cache_file else {}
    digests = {p: file_digest(p) for p in paths if Path(p).is_file()} if cache_file else {}

    table = FeatureTable({})
    todo = []
    for p in paths:
        hit = cache.get((p, digests.get(p, "")))
        if hit is not None and set(hit) >= set(GROUP_ORDER):
            table.groups[p] = hit
        else:
            todo.append(p)

    work = [(p, settings) for p in todo]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_extract_one, work, chunksize=4))
    else:
        results = [_extract_one(w) for w in work]

    for path, groups, err in results:
        if err is None:
            table.groups[path] = groups
            if cache_file and path in digests:
                cache[(path, digests[path])] = groups
        else:
            log.warning("excluding %s: %s", path, err)
            table.failures[path] = err
    if cache_file and todo:
        save_cache(cache_file, cache)
    return table


# -- evaluation --------------------------------------------------------------


@dataclass(frozen=True)
class EvaluationReport:
    config: str
    classes: tuple[str, ...]
    n_test: np.ndarray  # per class
    n_correct: np.ndarray  # per class
    confusion: np.ndarray  # [true, predicted]

    @property
    def n_t(self) -> int:
        return int(self.n_test.sum())

    @property
    def n_r(self) -> int:
        return int(self.n_correct.sum())

    @property
    def accuracy(self) -> float:
        return self.n_r / self.n_t

    @property
    def per_class_accuracy(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.n_test > 0, self.n_correct / np.maximum(self.n_test, 1), np.nan)


def evaluate(model: PnnModel, features, labels: Sequence[str], config: str | None = None) -> EvaluationReport:
    """Classify every test vector; accuracy is correct / total queries."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("no test vectors")
    if x.shape[1] != model.dim:
        raise DimensionMismatch(f"model expects {model.dim} features, got {x.shape[1]}")
    index = {c: k for k, c in enumerate(model.classes)}
    k = len(model.classes)
    confusion = np.zeros((k, k), dtype=np.int64)
    for lab, res in zip(labels, classify_many(model, x)):
        if lab not in index:
            raise ValueError(f"test label {lab!r} is not a trained class")
        confusion[index[lab], res.index] += 1
    return EvaluationReport(
        config=config if config is not None else (model.feature_config or ""),
        classes=model.classes,
        n_test=confusion.sum(axis=1),
        n_correct=np.diag(confusion).copy(),
        confusion=confusion,
    )


def run_split(
    table: FeatureTable,
    split: DatasetManifest,
    config: FeatureConfig,
    sigma: float = DEFAULT_SIGMA,
) -> tuple[PnnModel, EvaluationReport]:
    """Train on the ``train`` entries of ``split`` and evaluate on its ``test`` entries."""
    x_tr, y_tr = table.matrix(split.subset("train"), config)
    x_te, y_te = table.matrix(split.subset("test"), config)
    model = train(x_tr, y_tr, sigma=sigma, feature_config=config.name)
    return model, evaluate(model, x_te, y_te, config.name)


def usable(manifest: DatasetManifest, table: FeatureTable) -> DatasetManifest:
    """Drop entries whose extraction failed."""
    return manifest.without(table.failures)


def ablation_grid(
    manifest: DatasetManifest,
    table: FeatureTable,
    configs: Sequence[FeatureConfig],
    train_per_class: int,
    test_per_class: int,
    seed: int = 0,
    sigma: float = DEFAULT_SIGMA,
) -> list[EvaluationReport]:
    """One report per config, all on the same seeded split."""
    split = split_dataset(usable(manifest, table), train_per_class, test_per_class, seed)
    return [run_split(table, split, cfg, sigma)[1] for cfg in configs]


def sigma_curve(x_train, y_train, x_test, y_test, sigmas: Sequence[float]) -> list[tuple[float, float]]:
    """Accuracy at each smoothing factor on fixed train/test arrays."""
    sigmas = list(sigmas)
    if not sigmas:
        raise ValueError("no sigma values")
    if any(not s > 0 for s in sigmas):
        raise NonPositiveSigma(f"all sigma values must be positive: {sigmas}")
    out = []
    for s in sigmas:
        model = train(x_train, y_train, sigma=s)
        out.append((float(s), evaluate(model, x_test, y_test).accuracy))
    return out


def sigma_sweep(
    manifest: DatasetManifest,
    table: FeatureTable,
    config: FeatureConfig,
    sigmas: Sequence[float] = DEFAULT_SIGMAS,
    train_per_class: int = 40,
    test_per_class: int = 10,
    seed: int = 0,
) -> list[tuple[float, float]]:
    split = split_dataset(usable(manifest, table), train_per_class, test_per_class, seed)
    x_tr, y_tr = table.matrix(split.subset("train"), config)
    x_te, y_te = table.matrix(split.subset("test"), config)
    return sigma_curve(x_tr, y_tr, x_te, y_te, sigmas)


def learning_curve(
    manifest: DatasetManifest,
    table: FeatureTable,
    config: FeatureConfig,
    train_sizes: Sequence[int],
    test_per_class: int,
    repeats: int = 5,
    seed: int = 0,
    sigma: float = DEFAULT_SIGMA,
) -> list[tuple[int, float]]:
    """Mean accuracy over ``repeats`` seeded splits for each training size."""
    base = usable(manifest, table)
    out = []
    for size in train_sizes:
        accs = [
            run_split(table, split_dataset(base, size, test_per_class, seed + r), config, sigma)[1].accuracy
            for r in range(repeats)
        ]
        out.append((int(size), float(np.mean(accs))))
    return out


# -- CSV emission ------------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def write_report_csv(reports: Sequence[EvaluationReport], path) -> None:
    """Per-class rows plus an ``ALL`` summary row for each report."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["config", "class", "n_test", "n_correct", "accuracy"])
        for rep in reports:
            for c, nt, nc, acc in zip(rep.classes, rep.n_test, rep.n_correct, rep.per_class_accuracy):
                w.writerow([rep.config, c, int(nt), int(nc), _fmt(acc) if nt else ""])
            w.writerow([rep.config, "ALL", rep.n_t, rep.n_r, _fmt(rep.accuracy)])


def write_ablation_csv(reports: Sequence[EvaluationReport], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["config", "n_features", "n_test", "n_correct", "accuracy"])
        for rep in reports:
            w.writerow([rep.config, len(FeatureConfig.parse(rep.config)), rep.n_t, rep.n_r, _fmt(rep.accuracy)])


def write_curve_csv(points: Sequence[tuple[float, float]], header: Sequence[str], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for x, acc in points:
            w.writerow([x if isinstance(x, int) else repr(float(x)), _fmt(acc)])


def write_features_csv(table: FeatureTable, manifest: DatasetManifest, config: FeatureConfig, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "label", *feature_names(config)])
        for e in sorted(manifest.entries, key=lambda e: (e.label, e.path)):
            if e.path in table.groups:
                w.writerow([e.path, e.label, *(repr(float(v)) for v in assemble_features(table.groups[e.path], config))])
