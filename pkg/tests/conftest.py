import numpy as np
import pytest


def disk_mask(radius, pad=4, center=None):
    n = 2 * radius + 2 * pad + 1
    c = n // 2 if center is None else center
    y, x = np.mgrid[:n, :n]
    return (x - c) ** 2 + (y - c) ** 2 <= radius * radius


def smooth_blob(radius, seed):
    """Smooth, slightly irregular blob whose intensity excites every low polar frequency."""
    n = int(2.6 * radius)
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[:n, :n].astype(float)
    c = n / 2 + 0.3
    th = np.arctan2(y - c, x - c)
    r = np.hypot(x - c, y - c)
    rad = radius * (1 + 0.08 * np.cos(2 * th + rng.uniform(0, 6)) + 0.05 * np.cos(3 * th + rng.uniform(0, 6)))
    mask = r <= rad
    ang = sum(np.cos(q * th + rng.uniform(0, 6)) for q in range(1, 7)) / 6
    radial = sum(np.cos(2 * np.pi * k * r / radius + rng.uniform(0, 6)) for k in range(1, 5)) / 4
    g = np.where(mask, 100 + 90 * (r / radius) * ang * (1 + radial) / 2 + 20 * (r / radius) * ang, 0)
    return np.clip(np.rint(g), 0, 255).astype(np.uint8), mask


def random_blob_mask(rng, n=40, k=6):
    """Union of a few random discs, reduced to its largest 4-component, holes filled."""
    from scipy import ndimage as ndi

    y, x = np.mgrid[:n, :n]
    m = np.zeros((n, n), bool)
    cx, cy = n / 2, n / 2
    for _ in range(k):
        r = rng.uniform(4, 9)
        m |= (x - cx - rng.uniform(-8, 8)) ** 2 + (y - cy - rng.uniform(-8, 8)) ** 2 <= r * r
    m = ndi.binary_opening(m, structure=np.ones((3, 3)))  # no 1-px necks
    labels, num = ndi.label(m)
    if num == 0:
        return random_blob_mask(rng, n, k)
    m = labels == (np.argmax(np.bincount(labels.ravel())[1:]) + 1)
    return ndi.binary_fill_holes(m)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
