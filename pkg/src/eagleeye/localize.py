"""Salient point and salient region extraction from a saliency map.

The map produced at the fusion scale is lifted back to the camera frame's
resolution and quantized to 8-bit gray. The brightest pixel is the salient
point; a Gaussian blur plus flood fill around that point turns the single
point into a connected salient region with a bounding box and an
intensity-weighted centroid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import as_buffer, gaussian_blur, resize_bilinear
from .saliency import PipelineConfig, SaliencyOutput, compute_saliency


@dataclass(frozen=True)
class SalientPoint:
    x: int
    y: int
    gray: int

    def report_line(self) -> str:
        return f"Coordinate: ({self.x},{self.y}), Gray value: {self.gray}"


@dataclass
class SalientRegion:
    mask: np.ndarray                      # bool, full map dims
    bbox: tuple[int, int, int, int]       # inclusive (x0, y0, x1, y1)
    centroid: tuple[float, float]
    area_fraction: float


@dataclass
class SaliencyResult:
    """End-to-end detection output for one frame."""

    output: SaliencyOutput
    gray_map: np.ndarray
    point: SalientPoint
    region: SalientRegion


def export_gray(salience: np.ndarray, out_wh: tuple[int, int]) -> np.ndarray:
    """Upsample to the target dims and quantize to 0..255.

    The map is affinely stretched so min -> 0 and max -> 255, rounded half
    up. A constant map exports as all zeros.
    """
    sal = resize_bilinear(as_buffer(salience), out_wh)
    lo, hi = sal.min(), sal.max()
    if hi == lo:
        return np.zeros(sal.shape, dtype=np.uint8)
    scaled = (sal - lo) * (255.0 / (hi - lo))
    return np.floor(scaled + 0.5).astype(np.uint8)


def find_salient_point(gray_map: np.ndarray) -> SalientPoint:
    """Brightest pixel; ties resolved to the first in row-major scan order."""
    gm = np.asarray(gray_map)
    if gm.ndim != 2 or gm.size == 0:
        raise ValueError("gray map must be non-empty and 2-D")
    flat = int(np.argmax(gm))
    y, x = divmod(flat, gm.shape[1])
    return SalientPoint(x=int(x), y=int(y), gray=int(gm[y, x]))


def extract_salient_region(
    gray_map: np.ndarray,
    point: SalientPoint,
    blur_sigma: float = None,
    threshold_frac: float = 0.5,
) -> SalientRegion:
    """Grow the salient point into a connected region.

    The gray map is Gaussian-blurred (sigma defaults to 1% of the map
    width), thresholded at threshold_frac * blurred value at the point, and
    the 4-connected component containing the point becomes the region mask.
    """
    gm = np.asarray(gray_map, dtype=np.float64)
    if gm.ndim != 2 or gm.size == 0:
        raise ValueError("gray map must be non-empty and 2-D")
    h, w = gm.shape
    if not (0 <= point.x < w and 0 <= point.y < h):
        raise ValueError(f"salient point ({point.x},{point.y}) outside {w}x{h} map")
    if not 0.0 < threshold_frac < 1.0:
        raise ValueError("threshold_frac must be in (0, 1)")
    if blur_sigma is None:
        blur_sigma = max(0.01 * w, 0.5)

    blurred = gaussian_blur(gm, blur_sigma)
    cut = threshold_frac * blurred[point.y, point.x]
    candidates = blurred >= cut
    four_conn = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    labels, _ = ndimage.label(candidates, structure=four_conn)
    mask = labels == labels[point.y, point.x]

    ys, xs = np.nonzero(mask)
    bbox = (int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))
    weights = blurred[mask]
    wsum = weights.sum()
    if wsum > 0:
        cx = float((xs * weights).sum() / wsum)
        cy = float((ys * weights).sum() / wsum)
    else:
        cx = float(xs.mean())
        cy = float(ys.mean())
    return SalientRegion(
        mask=mask,
        bbox=bbox,
        centroid=(cx, cy),
        area_fraction=float(mask.sum()) / float(w * h),
    )


def locate_target(
    img: np.ndarray,
    cfg: PipelineConfig = None,
    threads: int = 1,
    blur_sigma: float = None,
    threshold_frac: float = 0.5,
) -> SaliencyResult:
    """Run the saliency pipeline and localize the most salient target."""
    out = compute_saliency(img, cfg, threads)
    gray = export_gray(out.salience, out.input_dims)
    point = find_salient_point(gray)
    region = extract_salient_region(gray, point, blur_sigma, threshold_frac)
    return SaliencyResult(output=out, gray_map=gray, point=point, region=region)
