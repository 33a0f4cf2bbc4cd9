"""Synthetic test images with known edge geometry."""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from .scale_space import ScalarField

__all__ = [
    "step_image",
    "square_image",
    "gaussian_blob",
    "smooth_image",
    "step_ground_truth",
    "square_ground_truth",
    "FIXTURES",
    "make_fixture",
]


def step_image(size: int = 64, column: int = 32, low: float = 0.0, high: float = 255.0) -> ScalarField:
    """Vertical step: columns ``< column`` at ``low``, the rest at ``high``."""
    data = np.full((size, size), low, dtype=np.float64)
    data[:, column:] = high
    return ScalarField(data)


def step_ground_truth(size: int = 64, column: int = 32) -> np.ndarray:
    """Boolean mask of the two pixel columns that straddle the step."""
    gt = np.zeros((size, size), dtype=bool)
    gt[:, column - 1 : column + 1] = True
    return gt


def square_image(
    size: int = 64, lo: int = 16, hi: int = 48, background: float = 0.0, fill: float = 255.0
) -> ScalarField:
    """Bright square occupying rows and columns ``[lo, hi)``."""
    data = np.full((size, size), background, dtype=np.float64)
    data[lo:hi, lo:hi] = fill
    return ScalarField(data)


def square_ground_truth(size: int = 64, lo: int = 16, hi: int = 48) -> np.ndarray:
    """Pixels with an 8-neighbour on the other side of the square's boundary."""
    inside = np.zeros((size, size), dtype=bool)
    inside[lo:hi, lo:hi] = True
    ring = np.ones((3, 3), dtype=bool)
    outer = ndimage.binary_dilation(inside, ring) & ~inside
    inner = ndimage.binary_dilation(~inside, ring) & inside
    return outer | inner


def gaussian_blob(size: int = 64, spacing: float = 1.0, sigma: float = 6.0) -> ScalarField:
    """Isotropic Gaussian on a ``size * spacing`` square, slightly off-centre.

    Keeping the physical extent fixed while halving ``spacing`` refines the
    same continuous image.
    """
    extent = size * spacing
    x = (np.arange(size) + 0.5) * spacing
    X, Y = np.meshgrid(x, x)
    cx, cy = extent / 2 + 0.3, extent / 2 + 1.0
    return ScalarField(np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * sigma**2)), spacing)


def smooth_image(size: int = 128, spacing: float = 1.0) -> ScalarField:
    """Sum of low-frequency sinusoids and a blob, values roughly in [0, 1]."""
    extent = size * spacing
    x = np.arange(size) * spacing
    X, Y = np.meshgrid(x, x)
    w = 2 * np.pi / extent
    data = (
        0.5
        + 0.2 * np.cos(2 * w * X + 0.3) * np.cos(w * Y)
        + 0.15 * np.sin(3 * w * Y + 0.5)
        + 0.1 * np.exp(-((X - 0.4 * extent) ** 2 + (Y - 0.6 * extent) ** 2) / (2 * (0.12 * extent) ** 2))
    )
    return ScalarField(data, spacing)


FIXTURES = {
    "step": step_image,
    "square": square_image,
    "blob": gaussian_blob,
    "smooth": smooth_image,
}


def make_fixture(name: str, size: int = 64) -> ScalarField:
    try:
        factory = FIXTURES[name]
    except KeyError:
        raise ValueError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None
    return factory(size)
