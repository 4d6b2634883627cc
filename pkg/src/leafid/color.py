"""Per-channel RGB colour moments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CHANNELS = ("r", "g", "b")


@dataclass(frozen=True)
class ColorMoments:
    """Population moments per channel, each an array ordered R, G, B."""

    mean: np.ndarray
    std: np.ndarray
    skewness: np.ndarray
    kurtosis: np.ndarray  # excess form


def channel_moments(values: np.ndarray) -> tuple[float, float, float, float]:
    """Mean, std, skewness and excess kurtosis of a 1-D sample.

    Normalisation is by the sample count (population form).  A zero-spread
    sample reports skewness and kurtosis of 0.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    n = v.size
    mu = v.sum() / n
    dev = v - mu
    var = (dev**2).sum() / n
    sigma = float(np.sqrt(var))
    if sigma <= 1e-12 * max(1.0, abs(mu)):
        return float(mu), 0.0, 0.0, 0.0
    skew = (dev**3).sum() / (n * sigma**3)
    kurt = (dev**4).sum() / (n * sigma**4) - 3.0
    return float(mu), sigma, float(skew), float(kurt)


def color_moments(rgb: np.ndarray, mask: np.ndarray | None = None) -> ColorMoments:
    """Colour moments of the masked pixels (all pixels when ``mask`` is None)."""
    rgb = np.asarray(rgb)
    if mask is None:
        pixels = rgb.reshape(-1, 3)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != rgb.shape[:2]:
            raise ValueError("rgb and mask differ in shape")
        if not mask.any():
            raise ValueError("empty mask")
        pixels = rgb[mask]
    stats = np.array([channel_moments(pixels[:, k]) for k in range(3)])
    return ColorMoments(*(stats[:, i].copy() for i in range(4)))
