"""Per-leaf feature extraction and feature-group layouts."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np

from .color import color_moments
from .errors import ConfigError
from .imaging import LeafImage, centroid, load_leaf, max_radius, trace_contour
from .shape import ANGULAR_FREQS, RADIAL_FREQS, geometric_features, polar_fourier_descriptors
from .texture import averaged_texture_features
from .vein import vein_features

GROUP_ORDER = ("pft", "geom", "mean", "std", "skew", "kurt", "glcm", "vein")
GROUP_SIZES = {
    "pft": (RADIAL_FREQS + 1) * (ANGULAR_FREQS + 1),
    "geom": 3,
    "mean": 3,
    "std": 3,
    "skew": 3,
    "kurt": 3,
    "glcm": 5,
    "vein": 4,
}
_ALIASES = {
    "geometric": "geom",
    "color_mean": "mean",
    "color_std": "std",
    "color_skew": "skew",
    "color_kurt": "kurt",
    "texture": "glcm",
}


@dataclass(frozen=True)
class FeatureConfig:
    """Selected feature groups in canonical order; ``vein`` keeps v1..v_k."""

    groups: tuple[str, ...]
    vein: int = 0

    def __post_init__(self):
        if not self.groups and not self.vein:
            raise ConfigError("empty feature configuration")
        if not 0 <= self.vein <= 4:
            raise ConfigError("vein count must be between 0 and 4")

    @classmethod
    def parse(cls, text: str) -> "FeatureConfig":
        """Parse ``"pft+geom+mean+vein3"`` style strings or a preset name."""
        text = text.strip().lower()
        if text in PRESETS:
            return PRESETS[text]
        groups, vein = set(), 0
        for token in filter(None, (t.strip() for t in text.replace(",", "+").split("+"))):
            token = _ALIASES.get(token, token)
            if token.startswith("vein"):
                suffix = token[4:]
                vein = int(suffix) if suffix else 4
                if not 1 <= vein <= 4:
                    raise ConfigError(f"bad vein selector {token!r}")
            elif token in GROUP_SIZES:
                groups.add(token)
            else:
                raise ConfigError(f"unknown feature group {token!r}")
        return cls(tuple(g for g in GROUP_ORDER if g in groups), vein)

    @property
    def name(self) -> str:
        parts = list(self.groups) + ([f"vein{self.vein}"] if self.vein else [])
        return "+".join(parts)

    def __len__(self) -> int:
        return sum(GROUP_SIZES[g] for g in self.groups) + self.vein

    def __str__(self) -> str:
        return self.name


def _cfg(text):
    return FeatureConfig.parse(text)


PRESETS = {}
PRESETS["best-flavia"] = _cfg("pft+geom+mean+std+skew+vein3")
PRESETS["best-foliage"] = _cfg("pft+geom+mean+std+skew+vein1")
PRESETS["full"] = _cfg("pft+geom+mean+std+skew+kurt+glcm+vein4")

# The twelve ablation rows selected by `--configs table2`, in order.
TABLE2 = tuple(
    _cfg(s)
    for s in (
        "pft",
        "pft+geom",
        "pft+geom+mean",
        "pft+geom+mean+std",
        "pft+geom+mean+std+skew",
        "pft+geom+mean+std+skew+kurt",
        "pft+geom+mean+std+skew+kurt+glcm",
        "pft+geom+mean+std+skew+glcm",
        "pft+geom+mean+std+skew+vein1",
        "pft+geom+mean+std+skew+vein2",
        "pft+geom+mean+std+skew+vein3",
        "pft+geom+mean+std+skew+vein4",
    )
)


def parse_configs(text: str) -> list[FeatureConfig]:
    """``table2`` or a ``;``-separated list of configs."""
    if text.strip().lower() == "table2":
        return list(TABLE2)
    return [FeatureConfig.parse(t) for t in text.split(";") if t.strip()]


@dataclass(frozen=True)
class ExtractionSettings:
    """Knobs that change extracted values; all of them enter the cache key."""

    polarity: str = "auto"
    max_side: int | None = None
    pft_mask: bool = True
    color_mask: bool = True
    levels: int = 8
    distance: int = 1
    idm: str = "squared"
    correlation: str = "product"
    vein_threshold: float | None = None
    dark_veins: bool = False

    def fingerprint(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def feature_names(config: FeatureConfig) -> list[str]:
    names = []
    for g in config.groups:
        if g == "pft":
            names += [f"pft_{p}_{q}" for p in range(RADIAL_FREQS + 1) for q in range(ANGULAR_FREQS + 1)]
        elif g == "geom":
            names += ["eccentricity", "roundness", "dispersion"]
        elif g in ("mean", "std", "skew", "kurt"):
            names += [f"{g}_{c}" for c in "rgb"]
        elif g == "glcm":
            names += ["asm", "contrast", "idm", "entropy", "correlation"]
    names += [f"vein_{k}" for k in range(1, config.vein + 1)]
    return names


def extract_groups(leaf: LeafImage, settings: ExtractionSettings = ExtractionSettings()) -> dict[str, np.ndarray]:
    """Every feature group for one segmented leaf."""
    mask = leaf.mask
    contour = trace_contour(mask)
    c = centroid(mask)
    r_max = max_radius(contour, c)
    pft = polar_fourier_descriptors(leaf.gray, mask if settings.pft_mask else None, c, r_max)
    geom = geometric_features(mask, contour, c)
    colors = color_moments(leaf.rgb, mask if settings.color_mask else None)
    tex = averaged_texture_features(
        leaf.gray,
        mask,
        levels=settings.levels,
        distance=settings.distance,
        idm=settings.idm,
        correlation=settings.correlation,
    )
    veins = vein_features(leaf.gray, mask, threshold=settings.vein_threshold, dark_veins=settings.dark_veins)
    return {
        "pft": pft,
        "geom": geom.as_array(),
        "mean": colors.mean,
        "std": colors.std,
        "skew": colors.skewness,
        "kurt": colors.kurtosis,
        "glcm": tex.as_array(),
        "vein": veins.as_array(),
    }


def extract_file(path, settings: ExtractionSettings = ExtractionSettings()) -> dict[str, np.ndarray]:
    leaf = load_leaf(path, polarity=settings.polarity, max_side=settings.max_side)
    return extract_groups(leaf, settings)


def assemble_features(groups: dict[str, np.ndarray], config: FeatureConfig) -> np.ndarray:
    """Concatenate the selected groups in canonical order."""
    parts = [np.asarray(groups[g], dtype=np.float64) for g in config.groups]
    if config.vein:
        parts.append(np.asarray(groups["vein"], dtype=np.float64)[: config.vein])
    values = np.concatenate(parts)
    if len(values) != len(config):
        raise ConfigError(f"assembled {len(values)} values for a {len(config)}-wide config")
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite feature value")
    return values
