"""Report figures and overlay rasters written next to the CSV outputs."""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_SAVE_OPTS = dict(dpi=100, metadata={"Software": "eagleeye", "creationDate": None})


def draw_detection_overlay(rgb: np.ndarray, point, region) -> np.ndarray:
    """Copy of the input with the salient point, region bbox and centroid."""
    img = rgb.copy()
    h, w = img.shape[:2]
    x0, y0, x1, y1 = region.bbox
    red = (1.0, 0.0, 0.0)
    img[y0, x0:x1 + 1] = red
    img[y1, x0:x1 + 1] = red
    img[y0:y1 + 1, x0] = red
    img[y0:y1 + 1, x1] = red
    _cross(img, point.x, point.y, (0.0, 0.3, 1.0))
    cx, cy = region.centroid
    _cross(img, int(round(cx)), int(round(cy)), (0.0, 1.0, 0.0))
    return img


def _cross(img, x, y, color, arm: int = 4):
    h, w = img.shape[:2]
    x = min(max(x, 0), w - 1)
    y = min(max(y, 0), h - 1)
    img[y, max(0, x - arm):min(w, x + arm + 1)] = color
    img[max(0, y - arm):min(h, y + arm + 1), x] = color
    return img


def save_saliency_figure(path, rgb, gray_map, point, region) -> None:
    """Input frame, exported saliency map, and detection overlay side by side."""
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
    axes[0].imshow(rgb)
    axes[0].set_title("input")
    axes[1].imshow(gray_map, cmap="gray", vmin=0, vmax=255)
    axes[1].set_title("saliency (8-bit)")
    axes[2].imshow(draw_detection_overlay(rgb, point, region))
    axes[2].set_title(f"point ({point.x},{point.y}) gray {point.gray}")
    for ax in axes:
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def save_loop_figure(path, report, wide_rgb, long_rgb, geom) -> None:
    """Closed-loop summary: final frames, servo trajectory, centering."""
    fig, axes = plt.subplots(2, 2, figsize=(11, 7.5))
    ax = axes[0, 0]
    ax.imshow(wide_rgb)
    for k in range(1, 6):
        ax.axvline(k * geom.width / 6.0, color="w", lw=0.5, alpha=0.6)
        ax.axhline(k * geom.height / 6.0, color="w", lw=0.5, alpha=0.6)
    last = report.final_step
    if last is not None and last.point is not None:
        ax.plot(last.point.x, last.point.y, "r+", ms=12, mew=2)
    ax.set_title("wide view + grid")

    ax = axes[0, 1]
    ax.imshow(long_rgb)
    cx, cy = (geom.width - 1) / 2.0, (geom.height - 1) / 2.0
    ax.plot(cx, cy, "c+", ms=14, mew=2)
    third = plt.Rectangle(
        (geom.width / 3.0, geom.height / 3.0), geom.width / 3.0, geom.height / 3.0,
        fill=False, color="c", lw=1.0, ls="--",
    )
    ax.add_patch(third)
    ax.set_title("narrow view (center third dashed)")
    for a in (axes[0, 0], axes[0, 1]):
        a.set_xticks([])
        a.set_yticks([])

    ax = axes[1, 0]
    if report.trajectory:
        t = [row[0] for row in report.trajectory]
        ax.plot(t, [row[3] for row in report.trajectory], label="pan")
        ax.plot(t, [row[4] for row in report.trajectory], label="tilt")
        ax.legend(loc="best")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("angle [deg]")
    ax.set_title("servo trajectory")

    ax = axes[1, 1]
    steps = [s for s in report.steps if s.detected and s.offset_px is not None]
    if steps:
        ax.plot(
            [s.index for s in steps],
            [float(np.hypot(*s.offset_px)) for s in steps],
            "o-",
        )
    ax.axhline(geom.width / 6.0, color="r", ls="--", lw=1.0, label="center-third bound")
    ax.set_xlabel("cycle")
    ax.set_ylabel("target offset [px]")
    ax.set_title("centering per cycle")
    ax.legend(loc="best")

    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
