"""Synthetic test frames: seeded noise, dots, and oriented bar arrays."""

from __future__ import annotations

import numpy as np


def random_rgb(seed: int, width: int, height: int) -> np.ndarray:
    """Seeded uniform RGB noise frame in [0, 1]."""
    rng = np.random.default_rng(seed)
    return rng.random((height, width, 3))


def dot_image(width: int, height: int, dot_xy: tuple[int, int],
              radius: int = 2, color=(1.0, 1.0, 1.0), base: float = 0.0) -> np.ndarray:
    """Flat frame with one bright disk."""
    img = np.full((height, width, 3), base)
    yy, xx = np.mgrid[0:height, 0:width]
    mask = (xx - dot_xy[0]) ** 2 + (yy - dot_xy[1]) ** 2 <= radius * radius
    img[mask] = color
    return img


def bar_array_image(
    width: int = 640,
    height: int = 480,
    cols: int = 5,
    rows: int = 5,
    odd_cell: tuple[int, int] = (3, 1),
    bar_length: int = 72,
    bar_width: int = 16,
    intensity: float = 1.0,
    base: float = 0.15,
):
    """Grid of horizontal bars with one vertical odd-one-out.

    Returns (image, odd_bbox) where odd_bbox = (x0, y0, x1, y1) inclusive
    pixel bounds of the vertical bar.
    """
    img = np.full((height, width, 3), base)
    odd_bbox = None
    for j in range(rows):
        for i in range(cols):
            cx = int((i + 0.5) * width / cols)
            cy = int((j + 0.5) * height / rows)
            if (i, j) == odd_cell:
                half_w, half_h = bar_width // 2, bar_length // 2
            else:
                half_w, half_h = bar_length // 2, bar_width // 2
            x0, x1 = cx - half_w, cx + half_w
            y0, y1 = cy - half_h, cy + half_h
            img[y0:y1 + 1, x0:x1 + 1] = intensity
            if (i, j) == odd_cell:
                odd_bbox = (x0, y0, x1, y1)
    return img, odd_bbox
