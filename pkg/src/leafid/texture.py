"""Gray-level co-occurrence matrices and the five derived texture statistics."""

from __future__ import annotations

from dataclasses import astuple, dataclass

import numpy as np

from .errors import AllDirectionsEmpty, EmptyGlcm

BACKGROUND = -1

# (dx, dy) per compass angle; y grows downward so "up" is dy = -1.
DIRECTIONS = {
    0: (1, 0),
    45: (1, -1),
    90: (0, -1),
    135: (-1, -1),
    180: (-1, 0),
    225: (-1, 1),
    270: (0, 1),
    315: (1, 1),
}
EIGHT_DIRECTIONS = tuple(DIRECTIONS)
FOUR_DIRECTIONS = (0, 45, 90, 135)


@dataclass(frozen=True)
class Quantized:
    levels: int
    data: np.ndarray  # BACKGROUND outside the leaf


@dataclass(frozen=True)
class Glcm:
    levels: int
    matrix: np.ndarray
    state: str  # "raw" | "symmetric" | "normalized"
    offset: tuple[int, int] | None = None
    distance: int = 1


@dataclass(frozen=True)
class TextureFeatures:
    asm: float
    contrast: float
    idm: float
    entropy: float
    correlation: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)


def quantize(gray: np.ndarray, mask: np.ndarray | None = None, levels: int = 8) -> Quantized:
    """Uniform bins ``floor(v * levels / 256)``; pixels outside ``mask`` get BACKGROUND."""
    if levels < 2:
        raise ValueError("need at least 2 gray levels")
    g = np.asarray(gray, dtype=np.int64)
    q = np.minimum(g * levels // 256, levels - 1)
    if mask is not None:
        q = np.where(np.asarray(mask, dtype=bool), q, BACKGROUND)
    return Quantized(levels, q)


def build_glcm(q: Quantized, offset: tuple[int, int], distance: int = 1) -> Glcm:
    """Raw co-occurrence counts of ordered pairs ``(p, p + distance * offset)``.

    Only pairs where both pixels lie inside the leaf are counted.
    """
    if distance < 1:
        raise ValueError("distance must be >= 1")
    dx, dy = offset[0] * distance, offset[1] * distance
    data = q.data
    h, w = data.shape
    if abs(dx) >= w or abs(dy) >= h:
        raise EmptyGlcm(f"offset {offset} x{distance} exceeds the image")
    a = data[max(0, -dy) : h - max(0, dy), max(0, -dx) : w - max(0, dx)]
    b = data[max(0, dy) : h - max(0, -dy), max(0, dx) : w - max(0, -dx)]
    valid = (a != BACKGROUND) & (b != BACKGROUND)
    if not valid.any():
        raise EmptyGlcm(f"no pixel pair inside the leaf for offset {offset}")
    L = q.levels
    counts = np.bincount(a[valid] * L + b[valid], minlength=L * L).reshape(L, L)
    return Glcm(L, counts, "raw", tuple(offset), distance)


def symmetrize_normalize(g: Glcm) -> Glcm:
    """``(G + G^T) / sum(G + G^T)``."""
    if g.state != "raw":
        raise ValueError(f"expected a raw GLCM, got {g.state}")
    sym = g.matrix + g.matrix.T
    total = sym.sum()
    if total == 0:
        raise EmptyGlcm("GLCM has no counts")
    return Glcm(g.levels, sym / total, "normalized", g.offset, g.distance)


def haralick_features(g: Glcm, idm: str = "squared", correlation: str = "product") -> TextureFeatures:
    """ASM, contrast, IDM, entropy and correlation of a normalized GLCM.

    ``idm="squared"`` squares the GLCM entry in the numerator; ``"standard"``
    is the usual homogeneity ``sum p / (1 + (i - j)^2)``.

    ``correlation="product"`` is ``sum ij (p - mu_i mu_j) / (s_i s_j)``;
    ``"standard"`` is ``(sum ij p - mu_i mu_j) / (s_i s_j)``.  Either form
    is 0 when ``s_i s_j < 1e-12``.  Indices run from 0.
    """
    if g.state != "normalized":
        raise ValueError(f"expected a normalized GLCM, got {g.state}")
    p = np.asarray(g.matrix, dtype=np.float64)
    i, j = np.indices(p.shape)
    d2 = (i - j) ** 2

    asm = float((p**2).sum())
    contrast = float((d2 * p).sum())
    if idm == "squared":
        idm_value = float((p**2 / (1 + d2)).sum())
    elif idm == "standard":
        idm_value = float((p / (1 + d2)).sum())
    else:
        raise ValueError(f"unknown idm form {idm!r}")
    nz = p > 0
    entropy = float(-(p[nz] * np.log(p[nz])).sum())

    mu_i = (i * p).sum()
    mu_j = (j * p).sum()
    s_i = np.sqrt(((i - mu_i) ** 2 * p).sum())
    s_j = np.sqrt(((j - mu_j) ** 2 * p).sum())
    if s_i * s_j < 1e-12:
        corr = 0.0
    elif correlation == "product":
        corr = float((i * j * (p - mu_i * mu_j)).sum() / (s_i * s_j))
    elif correlation == "standard":
        corr = float(((i * j * p).sum() - mu_i * mu_j) / (s_i * s_j))
    else:
        raise ValueError(f"unknown correlation form {correlation!r}")
    return TextureFeatures(asm, contrast, idm_value, entropy, corr)


def direction_features(
    gray: np.ndarray,
    mask: np.ndarray | None,
    levels: int = 8,
    distance: int = 1,
    directions=EIGHT_DIRECTIONS,
    idm: str = "squared",
    correlation: str = "product",
) -> dict[int, TextureFeatures]:
    """Features per direction angle; directions without leaf pixel pairs are omitted."""
    q = quantize(gray, mask, levels)
    out = {}
    for angle in directions:
        try:
            glcm = symmetrize_normalize(build_glcm(q, DIRECTIONS[angle], distance))
        except EmptyGlcm:
            continue
        out[angle] = haralick_features(glcm, idm=idm, correlation=correlation)
    return out


def averaged_texture_features(
    gray: np.ndarray,
    mask: np.ndarray | None,
    levels: int = 8,
    distance: int = 1,
    directions=EIGHT_DIRECTIONS,
    idm: str = "squared",
    correlation: str = "product",
) -> TextureFeatures:
    """Mean of the per-direction features over every non-empty direction."""
    per_dir = direction_features(gray, mask, levels, distance, directions, idm, correlation)
    if not per_dir:
        raise AllDirectionsEmpty("leaf too thin for every GLCM offset")
    stacked = np.array([f.as_array() for f in per_dir.values()])
    return TextureFeatures(*(float(v) for v in stacked.mean(axis=0)))
