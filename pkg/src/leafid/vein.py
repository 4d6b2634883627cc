"""Vein density from grayscale top-hat residues at disk radii 1-4."""

from __future__ import annotations

from dataclasses import astuple, dataclass

import numpy as np
from PIL import Image
from scipy import ndimage as ndi
from skimage.filters import threshold_otsu

VEIN_RADII = (1, 2, 3, 4)


@dataclass(frozen=True)
class VeinFeatures:
    v1: float
    v2: float
    v3: float
    v4: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)


def disk(radius: int) -> np.ndarray:
    """Flat disk footprint ``dx^2 + dy^2 <= radius^2``."""
    r = np.arange(-radius, radius + 1)
    return (r[:, None] ** 2 + r[None, :] ** 2) <= radius**2


def gray_opening(gray: np.ndarray, radius: int) -> np.ndarray:
    """Erosion then dilation with a flat disk.

    Windows are clamped at the image edge, which for a flat element is the
    same as replicating the border pixels.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    return ndi.grey_opening(np.asarray(gray), footprint=disk(radius), mode="nearest")


def tophat(gray: np.ndarray, radius: int, dark_veins: bool = False) -> np.ndarray:
    """Non-negative residue ``gray - opening(gray)`` as int64.

    With ``dark_veins`` the residue is taken on the inverted image, which
    picks out thin structures darker than their surroundings.
    """
    g = np.asarray(gray, dtype=np.int64)
    if dark_veins:
        g = 255 - g
    return np.maximum(g - gray_opening(g, radius), 0)


def residue_threshold(values: np.ndarray) -> float:
    """Otsu threshold over the positive residues, 0 when they are not bimodal."""
    pos = values[values > 0]
    if pos.size == 0 or pos.min() == pos.max():
        return 0.0
    return float(threshold_otsu(pos))


def vein_features(
    gray: np.ndarray,
    mask: np.ndarray,
    threshold: float | None = None,
    dark_veins: bool = False,
) -> VeinFeatures:
    """Fraction of leaf pixels classed as vein at each opening radius.

    A leaf pixel counts as vein when its top-hat residue exceeds
    ``threshold``; by default that is the Otsu threshold of the positive
    residues at the same radius.
    """
    mask = np.asarray(mask, dtype=bool)
    area = int(mask.sum())
    if area == 0:
        raise ValueError("empty mask")
    ratios = []
    for radius in VEIN_RADII:
        residue = tophat(gray, radius, dark_veins)[mask]
        if not residue.any():
            ratios.append(0.0)
            continue
        t = residue_threshold(residue) if threshold is None else threshold
        ratios.append(int((residue > t).sum()) / area)
    return VeinFeatures(*ratios)


def save_tophat_png(gray: np.ndarray, mask: np.ndarray, radius: int, path, dark_veins: bool = False) -> None:
    """Debug export of the masked top-hat residue, contrast-stretched to 8 bits."""
    res = np.where(mask, tophat(gray, radius, dark_veins), 0).astype(np.float64)
    if res.max() > 0:
        res *= 255.0 / res.max()
    Image.fromarray(res.astype(np.uint8)).save(path, format="PNG")
