"""Low-level raster operations: validation, separable filtering, resampling.

All maps are 2-D float64 numpy arrays indexed [row, col]. Every operation
here is deterministic and mirror-symmetric: horizontally flipping the input
and flipping the output commute bit-for-bit (resampling weights are derived
from integer arithmetic so reflected pixels see identical coefficients).
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

BINOMIAL5 = (1.0, 4.0, 6.0, 4.0, 1.0)


def as_buffer(data) -> np.ndarray:
    """Validate a 2-D scalar map: float64, non-empty, all finite."""
    buf = np.asarray(data, dtype=np.float64)
    if buf.ndim != 2 or buf.size == 0:
        raise ValueError(f"expected a non-empty 2-D map, got shape {buf.shape}")
    if not np.all(np.isfinite(buf)):
        raise ValueError("map contains NaN or Inf values")
    return buf


def as_rgb(data) -> np.ndarray:
    """Validate an RGB raster: (H, W, 3) float64, finite, values in [0, 1]."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] == 0 or img.shape[1] == 0:
        raise ValueError(f"expected a non-empty (H, W, 3) image, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains NaN or Inf values")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("image samples must lie in [0, 1]")
    return img


def level_dims(width: int, height: int, level: int) -> tuple[int, int]:
    """Dimensions after `level` rounds of ceil-halving, clamped at 1x1."""
    w, h = int(width), int(height)
    for _ in range(level):
        w = max(1, (w + 1) // 2)
        h = max(1, (h + 1) // 2)
    return w, h


def _axis_taps(n_in: int, n_out: int):
    """Bilinear taps for one axis, pixel-center aligned.

    Output sample j sits at source coordinate (j+0.5)*n_in/n_out - 0.5.
    Indices and weights come from exact integer arithmetic: the fractional
    position is r/D with D = 2*n_out, so a reflected output pixel gets the
    same two weights swapped and the result mirrors exactly.
    """
    j = np.arange(n_out, dtype=np.int64)
    d = 2 * n_out
    n = (2 * j + 1) * n_in - n_out
    i0 = n // d
    r = n - i0 * d
    w1 = r.astype(np.float64) / d
    w0 = (d - r).astype(np.float64) / d
    ia = np.clip(i0, 0, n_in - 1)
    ib = np.clip(i0 + 1, 0, n_in - 1)
    return ia, ib, w0, w1


def resize_bilinear(buf: np.ndarray, out_wh: tuple[int, int]) -> np.ndarray:
    """Resample a map to (width, height) with pixel-center aligned bilinear
    interpolation and clamp-to-edge sampling. Identity when sizes match."""
    buf = as_buffer(buf)
    w_out, h_out = int(out_wh[0]), int(out_wh[1])
    if w_out <= 0 or h_out <= 0:
        raise ValueError("target dimensions must be positive")
    h_in, w_in = buf.shape
    if (w_in, h_in) == (w_out, h_out):
        return buf.copy()
    ia, ib, w0, w1 = _axis_taps(h_in, h_out)
    rows = buf[ia, :] * w0[:, None] + buf[ib, :] * w1[:, None]
    ja, jb, v0, v1 = _axis_taps(w_in, w_out)
    return rows[:, ja] * v0[None, :] + rows[:, jb] * v1[None, :]


def filter_separable(buf: np.ndarray, kernel) -> np.ndarray:
    """Convolve rows then columns with a symmetric 1-D kernel, clamp-to-edge."""
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 1 or k.size % 2 == 0:
        raise ValueError("kernel must be 1-D with odd length")
    out = ndimage.correlate1d(buf, k, axis=0, mode="nearest")
    return ndimage.correlate1d(out, k, axis=1, mode="nearest")


def decimate2(buf: np.ndarray) -> np.ndarray:
    """Drop to ceil-half size by stride-2 sampling on the centred grid.

    Odd extents keep samples 0, 2, 4, ...; even extents average adjacent
    pairs (grid offset 0.5) so the sample grid is symmetric under mirroring.
    """
    buf = as_buffer(buf)

    def one_axis(a, axis):
        n = a.shape[axis]
        if n == 1:
            return a
        sl = [slice(None)] * a.ndim
        if n % 2 == 1:
            sl[axis] = slice(0, None, 2)
            return a[tuple(sl)]
        sl_even = list(sl)
        sl_even[axis] = slice(0, None, 2)
        sl_odd = list(sl)
        sl_odd[axis] = slice(1, None, 2)
        return 0.5 * (a[tuple(sl_even)] + a[tuple(sl_odd)])

    return one_axis(one_axis(buf, 0), 1)


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Normalized Gaussian taps truncated at 3 sigma (radius >= 1)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    radius = max(1, int(np.ceil(3.0 * sigma)))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(buf: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with clamp-to-edge borders."""
    return filter_separable(as_buffer(buf), gaussian_kernel1d(sigma))
