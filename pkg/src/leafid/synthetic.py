"""Procedural leaf-like rasters for tests and offline experiments.

Each class is a (shape, colour, stripe period) triple; every sample gets a
random rotation, scale, small shape/colour jitter, random stripe direction
and phase, and pixel noise.  Leaves are drawn on a near-white background.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

SHAPES = ("ellipse", "lobed", "ovate", "diamond")

# Colours sharing one luminance (~100), so only chroma separates them.
ISOLUMINANT = ((60, 120, 102), (180, 70, 45), (40, 110, 206), (130, 100, 21))


@dataclass(frozen=True)
class ClassSpec:
    name: str
    shape: str = "ellipse"
    color: tuple[int, int, int] = (60, 140, 50)
    stripe_period: float | None = None
    stripe_amplitude: float = 40.0


def shape_radius(shape: str, theta: np.ndarray, jitter: float = 0.0) -> np.ndarray:
    """Unit-scale boundary radius as a function of polar angle."""
    if shape == "ellipse":
        a, b = 1.0, 0.55 * (1 + jitter)
        return 1.0 / np.sqrt((np.cos(theta) / a) ** 2 + (np.sin(theta) / b) ** 2)
    if shape == "lobed":
        return 0.8 + (0.2 + 0.1 * jitter) * np.cos(5 * theta)
    if shape == "ovate":
        return 0.7 + (0.3 + 0.1 * jitter) * np.cos(theta)
    if shape == "diamond":
        return 0.62 / (np.abs(np.cos(theta)) + (1.6 + jitter) * np.abs(np.sin(theta))) ** 0.9
    raise ValueError(f"unknown shape {shape!r}")


def render_leaf(spec: ClassSpec, rng: np.random.Generator, size: int = 128) -> np.ndarray:
    """One RGB uint8 sample of ``spec``."""
    c = (size - 1) / 2 + rng.uniform(-4, 4, size=2)
    scale = size * rng.uniform(0.36, 0.44)
    rot = rng.uniform(0, 2 * np.pi)
    yy, xx = np.mgrid[:size, :size].astype(np.float64)
    dx, dy = xx - c[0], yy - c[1]
    r = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx) - rot
    leaf = r <= scale * shape_radius(spec.shape, theta, rng.uniform(-0.05, 0.05))

    color = np.asarray(spec.color, dtype=np.float64) + rng.normal(0, 3, size=3)
    img = np.broadcast_to(color, (size, size, 3)).copy()
    if spec.stripe_period:
        phi = rng.uniform(0, np.pi)
        u = dx * np.cos(phi) + dy * np.sin(phi)
        wave = np.cos(2 * np.pi * u / spec.stripe_period + rng.uniform(0, 2 * np.pi))
        img += spec.stripe_amplitude * wave[..., None] * (color / color.mean())[None, None, :] / 2
    img += rng.normal(0, 3, size=img.shape)
    background = 245 + rng.normal(0, 2, size=img.shape)
    img = np.where(leaf[..., None], img, background)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def write_dataset(root, specs: Sequence[ClassSpec], per_class: int, seed: int = 0, size: int = 128) -> Path:
    """Write ``root/<class>/<nnn>.png`` for every class spec."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    for spec in specs:
        d = root / spec.name
        d.mkdir(parents=True, exist_ok=True)
        for i in range(per_class):
            Image.fromarray(render_leaf(spec, rng, size)).save(d / f"{i:03d}.png")
    return root


def twelve_class_specs() -> list[ClassSpec]:
    """3 shapes x 2 colours x 2 stripe periods."""
    colors = {"green": (60, 140, 50), "purple": (150, 60, 140)}
    stripes = {"fine": 3.0, "coarse": 9.0}
    return [
        ClassSpec(f"{s}-{cn}-{sn}", s, col, per)
        for s in ("ellipse", "lobed", "ovate")
        for cn, col in colors.items()
        for sn, per in stripes.items()
    ]


def color_only_specs() -> list[ClassSpec]:
    """Same shape and texture, isoluminant colours."""
    return [ClassSpec(f"color{k}", "ellipse", col, None) for k, col in enumerate(ISOLUMINANT)]


def stripe_only_specs() -> list[ClassSpec]:
    """Same shape and colour, different stripe periods."""
    return [ClassSpec(f"period{p}", "ellipse", (60, 140, 50), float(p)) for p in (3, 6, 12)]
