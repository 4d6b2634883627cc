"""Probabilistic neural network: Gaussian Parzen densities per class.

Training stores min-max normalised exemplars; classification evaluates

    log p(x | j) = -(d/2) log(2 pi) - d log(sigma) - log(n_j)
                   + logsumexp_k(-||x - X_k||^2 / (2 sigma^2))

and predicts the class with the largest value.  Everything stays in the log
domain: with ~50 features and sigma = 0.05 the raw exponentials underflow.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DimensionMismatch,
    EmptyTrainingSet,
    NonPositiveSigma,
    SingleClass,
    UnknownFormatVersion,
)

DEFAULT_SIGMA = 0.05
FORMAT_VERSION = 1


@dataclass(frozen=True)
class NormParams:
    low: np.ndarray
    high: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.low)


@dataclass(frozen=True)
class PnnModel:
    classes: tuple[str, ...]
    exemplars: tuple[np.ndarray, ...]  # per class, (n_j, d), normalised
    sigma: float
    norm: NormParams
    feature_config: str | None = None

    @property
    def dim(self) -> int:
        return self.norm.dim


@dataclass(frozen=True)
class Classification:
    label: str
    index: int
    log_density: np.ndarray
    posterior: np.ndarray = field(repr=False)


def normalize_fit(vectors) -> NormParams:
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyTrainingSet("no training vectors")
    return NormParams(x.min(axis=0), x.max(axis=0))


def normalize_apply(p: NormParams, x) -> np.ndarray:
    """Map each feature to ``(x - low) / (high - low)``; constant features map to 0.

    Unseen data may fall outside [0, 1]; no clamping is applied.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != p.dim:
        raise DimensionMismatch(f"expected {p.dim} features, got {x.shape[-1]}")
    span = p.high - p.low
    ok = span > 0
    out = np.zeros_like(x)
    out[..., ok] = (x[..., ok] - p.low[ok]) / span[ok]
    return out


def train(
    features,
    labels: Sequence[str],
    sigma: float = DEFAULT_SIGMA,
    feature_config: str | None = None,
) -> PnnModel:
    """Store normalised exemplars per class; classes are sorted by label."""
    if not sigma > 0:
        raise NonPositiveSigma(f"sigma must be positive, got {sigma}")
    x = np.asarray(features, dtype=np.float64)
    labels = [str(lab) for lab in labels]
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyTrainingSet("no training vectors")
    if len(labels) != x.shape[0]:
        raise DimensionMismatch("features and labels differ in length")
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise SingleClass(f"need at least two classes, got {list(classes)}")
    norm = normalize_fit(x)
    xn = normalize_apply(norm, x)
    lab = np.array(labels)
    exemplars = tuple(xn[lab == c] for c in classes)
    return PnnModel(classes, exemplars, float(sigma), norm, feature_config)


def _log_densities(model: PnnModel, xn: np.ndarray) -> np.ndarray:
    """Per-class log densities for normalised queries, shape (n_query, n_class)."""
    d = model.dim
    const = -0.5 * d * np.log(2 * np.pi) - d * np.log(model.sigma)
    out = np.empty((xn.shape[0], len(model.classes)))
    for j, ex in enumerate(model.exemplars):
        sq = ((xn[:, None, :] - ex[None, :, :]) ** 2).sum(axis=-1)
        out[:, j] = const - np.log(len(ex)) + logsumexp(-sq / (2 * model.sigma**2), axis=1)
    return out


def class_log_density(model: PnnModel, x, j: int) -> float:
    """log p(x | class j) for an already normalised vector ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise DimensionMismatch(f"expected {model.dim} features, got {x.shape}")
    return float(_log_densities(model, x[None, :])[0, j])


def classify_many(model: PnnModel, x) -> list[Classification]:
    """Classify raw-scale vectors, one row per query."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.dim:
        raise DimensionMismatch(f"expected {model.dim} features, got {x.shape[1]}")
    logd = _log_densities(model, normalize_apply(model.norm, x))
    post = np.exp(logd - logsumexp(logd, axis=1, keepdims=True))
    idx = np.argmax(logd, axis=1)  # first maximum wins ties
    return [
        Classification(model.classes[k], int(k), logd[n], post[n])
        for n, k in enumerate(idx)
    ]


def classify(model: PnnModel, x) -> Classification:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch("classify takes a single feature vector")
    return classify_many(model, x)[0]


def model_to_dict(model: PnnModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "feature_config": model.feature_config,
        "sigma": model.sigma,
        "classes": list(model.classes),
        "norm": {"min": model.norm.low.tolist(), "max": model.norm.high.tolist()},
        "exemplars": {c: ex.tolist() for c, ex in zip(model.classes, model.exemplars)},
    }


def model_from_dict(doc: dict) -> PnnModel:
    if doc.get("format_version") != FORMAT_VERSION:
        raise UnknownFormatVersion(f"unsupported model format {doc.get('format_version')!r}")
    classes = tuple(doc["classes"])
    d = len(doc["norm"]["min"])
    exemplars = tuple(np.array(doc["exemplars"][c], dtype=np.float64).reshape(-1, d) for c in classes)
    norm = NormParams(np.array(doc["norm"]["min"], dtype=np.float64), np.array(doc["norm"]["max"], dtype=np.float64))
    return PnnModel(classes, exemplars, float(doc["sigma"]), norm, doc.get("feature_config"))


def save_model(model: PnnModel, path) -> None:
    # json writes floats via repr(), which round-trips exactly
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n", encoding="utf-8")


def load_model(path) -> PnnModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
