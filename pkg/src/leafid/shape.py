"""Shape descriptors: polar Fourier magnitudes and three geometric ratios."""

from __future__ import annotations

from dataclasses import astuple, dataclass

import numpy as np

from .errors import DegenerateRadius, DegenerateShape
from .imaging import Centroid, contour_length

RADIAL_FREQS = 4
ANGULAR_FREQS = 6


@dataclass(frozen=True)
class GeometricFeatures:
    eccentricity: float
    roundness: float
    dispersion: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)


def polar_fourier_transform(
    gray: np.ndarray,
    mask: np.ndarray | None,
    c: Centroid,
    r_max: float,
    radial: int = RADIAL_FREQS,
    angular: int = ANGULAR_FREQS,
) -> np.ndarray:
    """Complex polar Fourier coefficients, shape ``(radial + 1, angular + 1)``.

    Coefficient ``[p, q]`` is the sum over pixels of
    ``I * exp(-i (2 pi p r / r_max + q theta))`` with ``(r, theta)`` the
    polar position relative to ``c`` and ``theta`` in ``[0, 2 pi)``.
    With a mask, pixels outside it contribute zero intensity; pixels
    farther than ``r_max`` from the centroid are skipped.
    """
    gray = np.asarray(gray, dtype=np.float64)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != gray.shape:
            raise ValueError("gray and mask differ in shape")
        ys, xs = np.nonzero(mask)
        intensity = gray[ys, xs]
    else:
        ys, xs = np.indices(gray.shape).reshape(2, -1)
        intensity = gray.ravel()
    dx = xs - c.x
    dy = ys - c.y
    r = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    theta = np.where(theta < 0, theta + 2 * np.pi, theta)
    keep = r <= r_max
    intensity, r, theta = intensity[keep], r[keep], theta[keep]

    # exp(-i(a + b)) factorises, so the double sum is one matrix product.
    radial_phase = np.exp(-2j * np.pi * np.outer(r / r_max, np.arange(radial + 1)))
    angular_phase = np.exp(-1j * np.outer(theta, np.arange(angular + 1)))
    return (radial_phase * intensity[:, None]).T @ angular_phase


def polar_fourier_descriptors(
    gray: np.ndarray,
    mask: np.ndarray | None,
    c: Centroid,
    r_max: float,
    radial: int = RADIAL_FREQS,
    angular: int = ANGULAR_FREQS,
) -> np.ndarray:
    """Normalized PFT magnitudes, ``(radial + 1) * (angular + 1)`` values.

    Entry 0 is the DC magnitude divided by ``pi * r_max**2``; entry
    ``p * (angular + 1) + q`` is ``|F[p, q]|`` divided by the DC magnitude.
    Pass ``mask=None`` to run over the raw grayscale raster.
    """
    if not r_max > 0:
        raise DegenerateRadius(f"maximum radius must be positive, got {r_max}")
    coeffs = polar_fourier_transform(gray, mask, c, r_max, radial, angular)
    mag = np.abs(coeffs).ravel()
    dc = mag[0]
    if dc == 0:
        raise DegenerateRadius("zero DC term (blank leaf region)")
    fd = mag / dc
    fd[0] = dc / (np.pi * r_max**2)
    return fd


def axis_moments(mask: np.ndarray) -> tuple[float, float]:
    """Eigenvalues ``(major, minor)`` of the mask's central second moments."""
    ys, xs = np.nonzero(mask)
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    cov = np.array([[np.mean(dx * dx), np.mean(dx * dy)], [np.mean(dx * dy), np.mean(dy * dy)]])
    lo, hi = np.linalg.eigvalsh(cov)
    return float(hi), float(max(lo, 0.0))


def geometric_features(mask: np.ndarray, contour: np.ndarray, c: Centroid) -> GeometricFeatures:
    """Eccentricity (minor/major axis), roundness (A/P^2) and dispersion.

    Axis lengths scale with the square roots of the moment eigenvalues, so
    only their ratio is formed.  P is the chain-code length of ``contour``.
    """
    contour = np.asarray(contour)
    if len(contour) < 3:
        raise DegenerateShape("contour needs at least 3 points")
    major, minor = axis_moments(mask)
    if major <= 0:
        raise DegenerateShape("zero major axis")
    perimeter = contour_length(contour)
    d = np.hypot(contour[:, 0] - c.x, contour[:, 1] - c.y)
    if d.min() == 0:
        raise DegenerateShape("centroid lies on the contour")
    area = int(np.count_nonzero(mask))
    return GeometricFeatures(
        eccentricity=float(np.sqrt(minor / major)),
        roundness=area / perimeter**2,
        dispersion=float(d.max() / d.min()),
    )
