"""Loading, segmentation and boundary geometry for single-leaf photographs.

Rasters are plain numpy arrays indexed ``[row, col]``.  Point coordinates are
``(x, y)`` with ``x`` the column and ``y`` the row, origin at the top-left.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage as ndi
from skimage.filters import threshold_otsu

from .errors import DecodeError, NoForeground

SUPPORTED_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")

# Moore neighbourhood, clockwise on screen (y grows downward), starting east.
_MOORE = np.array(
    [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]
)
_MOORE_INDEX = {tuple(d): i for i, d in enumerate(_MOORE)}
_WEST = 4

_FOUR = ndi.generate_binary_structure(2, 1)


class Centroid(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class LeafImage:
    """One specimen: RGB raster, its grayscale rendering and the leaf mask."""

    rgb: np.ndarray
    gray: np.ndarray
    mask: np.ndarray
    path: str | None = None


def to_gray(rgb: np.ndarray) -> np.ndarray:
    """Luminance ``0.299 R + 0.587 G + 0.114 B`` rounded half-up to uint8."""
    rgb = np.asarray(rgb, dtype=np.float64)
    lum = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.clip(np.floor(lum + 0.5), 0, 255).astype(np.uint8)


def load_leaf_image(path, max_side: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Read a PNG/JPEG/BMP file and return ``(rgb, gray)`` uint8 arrays.

    ``max_side`` optionally downsamples (area averaging) so that the longer
    side is at most that many pixels; large Flavia scans are ~1600x1200.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    try:
        with Image.open(path) as im:
            im = im.convert("RGB")
            if max_side is not None and max(im.size) > max_side:
                scale = max_side / max(im.size)
                size = (max(1, round(im.width * scale)), max(1, round(im.height * scale)))
                im = im.resize(size, Image.Resampling.BOX)
            rgb = np.asarray(im, dtype=np.uint8).copy()
    except (UnidentifiedImageError, OSError) as exc:
        raise DecodeError(f"{path}: {exc}") from exc
    return rgb, to_gray(rgb)


def _border(shape) -> np.ndarray:
    b = np.zeros(shape, dtype=bool)
    b[0, :] = b[-1, :] = b[:, 0] = b[:, -1] = True
    return b


def fill_holes(mask: np.ndarray) -> np.ndarray:
    """Set every false pixel unreachable from the image border to true.

    Background reachability uses 4-connectivity, the same background
    topology the 8-neighbour contour trace assumes; pockets that touch the
    outside only diagonally are filled.
    """
    return ndi.binary_fill_holes(mask, structure=_FOUR)


def largest_component(mask: np.ndarray) -> np.ndarray:
    """Largest 4-connected component; ties go to the first in raster order."""
    labels, n = ndi.label(mask, structure=_FOUR)
    if n == 0:
        raise NoForeground("no foreground component")
    sizes = np.bincount(labels.ravel())[1:]
    return labels == (int(np.argmax(sizes)) + 1)


def segment_leaf(gray: np.ndarray, polarity: str = "auto") -> np.ndarray:
    """Otsu-threshold ``gray`` and return a single, hole-free leaf mask.

    Parameters
    ----------
    gray : (H, W) array
        Grayscale intensities.
    polarity : {"auto", "dark", "light"}
        ``"auto"`` picks the class touching fewer border pixels, falling back
        to the darker class on a tie.  ``"dark"``/``"light"`` force the choice.
    """
    gray = np.asarray(gray)
    if gray.size == 0 or gray.min() == gray.max():
        raise NoForeground("image has a single intensity")
    t = threshold_otsu(gray)
    light = gray > t
    dark = ~light
    if polarity == "dark":
        leaf = dark
    elif polarity == "light":
        leaf = light
    elif polarity == "auto":
        border = _border(gray.shape)
        n_dark, n_light = int((dark & border).sum()), int((light & border).sum())
        leaf = light if n_light < n_dark else dark
    else:
        raise ValueError(f"unknown polarity {polarity!r}")
    if not leaf.any():
        raise NoForeground("threshold left no leaf pixels")
    return fill_holes(largest_component(leaf))


def trace_contour(mask: np.ndarray) -> np.ndarray:
    """Moore-neighbourhood boundary trace of a single-component mask.

    Starts at the topmost-then-leftmost leaf pixel and walks clockwise.
    Returns an ``(N, 2)`` int array of ``(x, y)`` points; the closing point
    is not repeated.  Tracing stops when the first move out of the start
    pixel would be repeated, so single-pixel necks are walked on both sides.
    """
    mask = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        raise NoForeground("empty mask")
    h, w = mask.shape
    y0 = ys.min()
    x0 = xs[ys == y0].min()
    start = (int(x0), int(y0))

    def fg(x, y):
        return 0 <= x < w and 0 <= y < h and mask[y, x]

    points = [start]
    cur, back = start, _WEST
    first_move = None
    for _ in range(8 * mask.size + 8):
        for k in range(1, 9):
            i = (back + k) % 8
            nx, ny = cur[0] + _MOORE[i][0], cur[1] + _MOORE[i][1]
            if fg(nx, ny):
                break
        else:
            return np.array(points)  # isolated pixel
        nxt = (int(nx), int(ny))
        if first_move is None:
            first_move = nxt
        elif cur == start and nxt == first_move:
            points.pop()
            return np.array(points)
        # the last background pixel examined becomes the new backtrack
        j = (i - 1) % 8
        bx, by = cur[0] + _MOORE[j][0], cur[1] + _MOORE[j][1]
        back = _MOORE_INDEX[(bx - nxt[0], by - nxt[1])]
        cur = nxt
        points.append(cur)
    raise RuntimeError("contour trace did not close")  # pragma: no cover


def contour_length(contour: np.ndarray) -> float:
    """Closed chain-code length: 1 per axial step, sqrt(2) per diagonal step."""
    contour = np.asarray(contour, dtype=np.float64)
    if len(contour) < 2:
        return 0.0
    steps = np.diff(np.vstack([contour, contour[:1]]), axis=0)
    return float(np.hypot(steps[:, 0], steps[:, 1]).sum())


def centroid(mask: np.ndarray) -> Centroid:
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        raise NoForeground("empty mask")
    return Centroid(float(xs.mean()), float(ys.mean()))


def max_radius(contour: np.ndarray, c: Centroid) -> float:
    """Largest centroid-to-contour distance."""
    pts = np.asarray(contour, dtype=np.float64)
    return float(np.hypot(pts[:, 0] - c.x, pts[:, 1] - c.y).max())


def load_leaf(path, polarity: str = "auto", max_side: int | None = None) -> LeafImage:
    rgb, gray = load_leaf_image(path, max_side=max_side)
    return LeafImage(rgb=rgb, gray=gray, mask=segment_leaf(gray, polarity), path=str(path))


def save_mask_png(mask: np.ndarray, path) -> None:
    """Write ``mask`` as a 1-bit PNG (white = leaf)."""
    Image.fromarray(np.asarray(mask, dtype=bool)).convert("1").save(path, format="PNG")
