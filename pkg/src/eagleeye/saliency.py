"""Bottom-up saliency pipeline.

An RGB frame is decomposed into intensity, four broadly tuned color
channels, and four oriented band-pass channels, each as a 9-level Gaussian
pyramid. Center-surround differences across scale pairs give 42 feature
maps (6 intensity, 12 color, 24 orientation). A peak-contrast normalization
operator re-weights each map, the maps collapse into three conspicuity
channels at a common fusion scale, and their normalized mean is the final
saliency map.

All stages are pure functions; `compute_saliency` can fan the per-map work
out to a thread pool and still produces bit-identical results because every
reduction runs in a fixed, content-independent order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .raster import (
    BINOMIAL5,
    as_buffer,
    as_rgb,
    decimate2,
    filter_separable,
    level_dims,
    resize_bilinear,
)

PYRAMID_LEVELS = 9
CENTER_SCALES = (2, 3, 4)
SURROUND_DELTAS = (3, 4)
ORIENTATIONS_DEG = (0.0, 45.0, 90.0, 135.0)

# sin/cos pairs hardcoded so mirrored orientations (45 <-> 135) use bitwise
# negated coefficients, keeping the filter bank exactly closed under
# horizontal reflection
_SQRT_HALF = float(np.sqrt(0.5))
_ORIENT_TRIG = {
    0.0: (0.0, 1.0),
    45.0: (_SQRT_HALF, _SQRT_HALF),
    90.0: (1.0, 0.0),
    135.0: (_SQRT_HALF, -_SQRT_HALF),
}


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable knobs of the saliency pipeline (defaults are the shipped ones)."""

    fusion_scale: int = 4
    hue_decouple_threshold: float = 0.1
    gabor_kernel_px: int = 9
    gabor_wavelength_px: float = 7.0
    gabor_sigma_px: float = 2.33
    gabor_phase_rad: float = 0.0
    gabor_aspect: float = 1.0
    downsample_kernel: tuple[float, ...] = BINOMIAL5

    def validate(self) -> "PipelineConfig":
        if not 2 <= self.fusion_scale <= 8:
            raise ValueError(f"fusion_scale must be in 2..8, got {self.fusion_scale}")
        if not 0.0 < self.hue_decouple_threshold < 1.0:
            raise ValueError("hue_decouple_threshold must be in (0, 1)")
        if self.gabor_kernel_px < 3 or self.gabor_kernel_px % 2 == 0:
            raise ValueError("gabor_kernel_px must be odd and >= 3")
        if self.gabor_wavelength_px <= 0 or self.gabor_sigma_px <= 0:
            raise ValueError("gabor wavelength and sigma must be positive")
        if self.gabor_aspect <= 0:
            raise ValueError("gabor aspect ratio must be positive")
        k = np.asarray(self.downsample_kernel, dtype=np.float64)
        if k.ndim != 1 or k.size % 2 == 0 or k.size < 1:
            raise ValueError("downsample_kernel must have odd length")
        if k.sum() <= 0:
            raise ValueError("downsample_kernel must have positive sum")
        return self

    @property
    def downsample_taps(self) -> np.ndarray:
        k = np.asarray(self.downsample_kernel, dtype=np.float64)
        return k / k.sum()


@dataclass
class FeatureMapSet:
    """The 42 center-surround maps, keyed by (c, s) and (c, s, theta)."""

    intensity: dict = field(default_factory=dict)
    color_rg: dict = field(default_factory=dict)
    color_by: dict = field(default_factory=dict)
    orientation: dict = field(default_factory=dict)

    def counts(self) -> tuple[int, int, int]:
        return (
            len(self.intensity),
            len(self.color_rg) + len(self.color_by),
            len(self.orientation),
        )


@dataclass
class ConspicuityMaps:
    """Per-channel aggregates at the fusion scale."""

    ibar: np.ndarray
    cbar: np.ndarray
    obar: np.ndarray


@dataclass
class SaliencyOutput:
    """Full pipeline result kept around for inspection and reporting."""

    salience: np.ndarray
    conspicuity: ConspicuityMaps
    features: FeatureMapSet
    input_dims: tuple[int, int]
    fusion_dims: tuple[int, int]


def scale_pairs():
    """The six (center, surround) scale pairs: c in {2,3,4}, s = c + {3,4}."""
    return [(c, c + d) for c in CENTER_SCALES for d in SURROUND_DELTAS]


def intensity_image(img: np.ndarray) -> np.ndarray:
    """Per-pixel mean of the three channels."""
    img = as_rgb(img)
    return (img[:, :, 0] + img[:, :, 1] + img[:, :, 2]) / 3.0


def hue_decoupled_channels(img, intensity, cfg: PipelineConfig = None):
    """Divide each channel by intensity where intensity is significant.

    Pixels darker than threshold * max(intensity) are zeroed instead of
    divided, so near-black pixels cannot blow up into spurious hues.
    """
    cfg = cfg or PipelineConfig()
    img = as_rgb(img)
    intensity = as_buffer(intensity)
    if intensity.shape != img.shape[:2]:
        raise ValueError("intensity map does not match image dimensions")
    cutoff = cfg.hue_decouple_threshold * intensity.max()
    live = intensity > cutoff
    out = []
    for ch in range(3):
        c = np.zeros_like(intensity)
        np.divide(img[:, :, ch], intensity, out=c, where=live)
        c[~live] = 0.0
        out.append(c)
    return tuple(out)


def broadly_tuned_colors(rp, gp, bp):
    """Red/green/blue/yellow opponent channels, clamped at zero.

    R = r - (g+b)/2, G = g - (r+b)/2, B = b - (r+g)/2,
    Y = (r+g)/2 - |r-g|/2 - b.
    """
    rp, gp, bp = as_buffer(rp), as_buffer(gp), as_buffer(bp)
    if rp.shape != gp.shape or gp.shape != bp.shape:
        raise ValueError("channel dimensions differ")
    red = rp - (gp + bp) / 2.0
    green = gp - (rp + bp) / 2.0
    blue = bp - (rp + gp) / 2.0
    yellow = (rp + gp) / 2.0 - np.abs(rp - gp) / 2.0 - bp
    zero = 0.0
    return (
        np.maximum(red, zero),
        np.maximum(green, zero),
        np.maximum(blue, zero),
        np.maximum(yellow, zero),
    )


def build_gaussian_pyramid(buf, cfg: PipelineConfig = None) -> list[np.ndarray]:
    """Nine levels; each level is binomially low-passed then decimated by 2.

    Level k has ceil(dims/2^k) extent, clamped at 1x1 for tiny inputs.
    """
    cfg = cfg or PipelineConfig()
    level = as_buffer(buf)
    taps = cfg.downsample_taps
    pyramid = [level]
    for _ in range(PYRAMID_LEVELS - 1):
        level = decimate2(filter_separable(level, taps))
        pyramid.append(level)
    return pyramid


def gabor_kernel(theta_deg: float, cfg: PipelineConfig = None) -> np.ndarray:
    """Zero-mean even Gabor tap grid for one orientation.

    theta is the orientation of the bars the filter responds to (0 deg =
    horizontal bars, 90 deg = vertical bars); the carrier oscillates
    perpendicular to the bars. The mean is subtracted so a constant input
    produces (numerically) zero response.
    """
    cfg = cfg or PipelineConfig()
    if theta_deg not in _ORIENT_TRIG:
        raise ValueError(f"unsupported orientation {theta_deg}; use one of {ORIENTATIONS_DEG}")
    sin_t, cos_t = _ORIENT_TRIG[theta_deg]
    half = cfg.gabor_kernel_px // 2
    y, x = np.mgrid[-half:half + 1, -half:half + 1].astype(np.float64)
    across = y * cos_t - x * sin_t        # carrier axis, perpendicular to the bars
    along = y * sin_t + x * cos_t
    sig2 = cfg.gabor_sigma_px ** 2
    gamma2 = cfg.gabor_aspect ** 2
    envelope = np.exp(-(across * across + gamma2 * along * along) / (2.0 * sig2))
    # abs() before cos: the even carrier is insensitive to it, but it makes
    # mirrored tap pairs bitwise identical
    carrier = np.cos(np.abs(2.0 * np.pi * across / cfg.gabor_wavelength_px + cfg.gabor_phase_rad))
    kern = envelope * carrier
    return kern - kern.mean()


def build_gabor_pyramid(intensity_pyramid, theta_deg: float, cfg: PipelineConfig = None):
    """Magnitude of the oriented band-pass response at every pyramid level."""
    cfg = cfg or PipelineConfig()
    kern = gabor_kernel(theta_deg, cfg)
    return [
        np.abs(ndimage.correlate(as_buffer(level), kern, mode="nearest"))
        for level in intensity_pyramid
    ]


def center_surround(center, surround) -> np.ndarray:
    """|center - surround| after lifting the surround to the center's grid."""
    center = as_buffer(center)
    surround = as_buffer(surround)
    ch, cw = center.shape
    sh, sw = surround.shape
    if sh > ch or sw > cw:
        raise ValueError(f"surround {surround.shape} is larger than center {center.shape}")
    return np.abs(center - resize_bilinear(surround, (cw, ch)))


def compute_feature_maps(
    int_pyr, r_pyr, g_pyr, b_pyr, y_pyr, orient_pyrs, threads: int = 1
) -> FeatureMapSet:
    """All 42 center-surround maps from the channel pyramids.

    orient_pyrs maps each orientation (degrees) to its pyramid. Each map is
    stored at the dimensions of its center scale.
    """
    fm = FeatureMapSet()
    jobs = []
    for c, s in scale_pairs():
        jobs.append(("intensity", (c, s), int_pyr[c], int_pyr[s]))
        jobs.append(("color_rg", (c, s), r_pyr[c] - g_pyr[c], g_pyr[s] - r_pyr[s]))
        jobs.append(("color_by", (c, s), b_pyr[c] - y_pyr[c], y_pyr[s] - b_pyr[s]))
        for theta in ORIENTATIONS_DEG:
            jobs.append(("orientation", (c, s, theta), orient_pyrs[theta][c], orient_pyrs[theta][s]))
    results = _run_jobs([(center_surround, (c, s)) for _, _, c, s in jobs], threads)
    for (kind, key, _, _), mapped in zip(jobs, results):
        getattr(fm, kind)[key] = mapped
    return fm


def normalize_map(m) -> np.ndarray:
    """Peak-contrast normalization.

    The map is rescaled to [0, 1], then multiplied by (1 - mean of the other
    local maxima)^2: a map with one dominant peak passes through, a map with
    many comparable peaks is suppressed. Local maxima are pixels strictly
    greater than their 3x3 neighbourhood; the single global-max pixel
    (first in row-major order on ties) is excluded from the mean. Constant
    maps normalize to all zeros.
    """
    m = as_buffer(m)
    lo = m.min()
    hi = m.max()
    if hi == lo:
        return np.zeros_like(m)
    scaled = (m - lo) / (hi - lo)
    peaks = _strict_local_maxima(scaled)
    peaks[np.unravel_index(np.argmax(scaled), scaled.shape)] = False
    others = scaled[peaks]
    mean_other = others.mean() if others.size else 0.0
    return scaled * (1.0 - mean_other) ** 2


def _strict_local_maxima(m: np.ndarray) -> np.ndarray:
    padded = np.pad(m, 1, mode="constant", constant_values=-np.inf)
    out = np.ones(m.shape, dtype=bool)
    h, w = m.shape
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            out &= m > padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
    return out


def across_scale_add(maps, fusion_dims: tuple[int, int]) -> np.ndarray:
    """Resample every map to the fusion grid and sum.

    The resampled maps are added in a canonical content-derived order
    (sorted by raw bytes), so the result is bit-identical under any
    permutation of the input list.
    """
    maps = list(maps)
    if not maps:
        raise ValueError("across_scale_add needs at least one map")
    resized = [resize_bilinear(m, fusion_dims) for m in maps]
    resized.sort(key=lambda a: a.tobytes())
    total = resized[0].copy()
    for m in resized[1:]:
        total += m
    return total


def conspicuity_maps(
    fm: FeatureMapSet, base_dims: tuple[int, int], cfg: PipelineConfig = None, threads: int = 1
) -> ConspicuityMaps:
    """Collapse the feature set into intensity/color/orientation channels."""
    cfg = (cfg or PipelineConfig()).validate()
    fusion = level_dims(base_dims[0], base_dims[1], cfg.fusion_scale)
    pairs = scale_pairs()

    norm_jobs = [(normalize_map, (fm.intensity[k],)) for k in pairs]
    norm_jobs += [(normalize_map, (fm.color_rg[k],)) for k in pairs]
    norm_jobs += [(normalize_map, (fm.color_by[k],)) for k in pairs]
    norm_jobs += [
        (normalize_map, (fm.orientation[(c, s, theta)],))
        for theta in ORIENTATIONS_DEG
        for c, s in pairs
    ]
    done = _run_jobs(norm_jobs, threads)
    n = len(pairs)
    n_int, n_rg, n_by = done[:n], done[n:2 * n], done[2 * n:3 * n]
    n_orient = done[3 * n:]

    ibar = across_scale_add(n_int, fusion)
    cbar = across_scale_add([a + b for a, b in zip(n_rg, n_by)], fusion)
    obar = None
    for t_idx in range(len(ORIENTATIONS_DEG)):
        chan = normalize_map(across_scale_add(n_orient[t_idx * n:(t_idx + 1) * n], fusion))
        obar = chan if obar is None else obar + chan
    return ConspicuityMaps(ibar=ibar, cbar=cbar, obar=obar)


def saliency_map(cm: ConspicuityMaps) -> np.ndarray:
    """Mean of the three normalized conspicuity channels."""
    return (normalize_map(cm.ibar) + normalize_map(cm.cbar) + normalize_map(cm.obar)) / 3.0


def compute_saliency(img, cfg: PipelineConfig = None, threads: int = 1) -> SaliencyOutput:
    """Full pipeline: RGB frame in, saliency map at the fusion scale out."""
    cfg = (cfg or PipelineConfig()).validate()
    img = as_rgb(img)
    h, w = img.shape[:2]

    intens = intensity_image(img)
    rp, gp, bp = hue_decoupled_channels(img, intens, cfg)

    int_pyr = build_gaussian_pyramid(intens, cfg)
    rp_pyr = build_gaussian_pyramid(rp, cfg)
    gp_pyr = build_gaussian_pyramid(gp, cfg)
    bp_pyr = build_gaussian_pyramid(bp, cfg)

    r_pyr, g_pyr, b_pyr, y_pyr = [], [], [], []
    for lr, lg, lb in zip(rp_pyr, gp_pyr, bp_pyr):
        cr, cg, cb, cy = broadly_tuned_colors(lr, lg, lb)
        r_pyr.append(cr)
        g_pyr.append(cg)
        b_pyr.append(cb)
        y_pyr.append(cy)

    orient_jobs = [(build_gabor_pyramid, (int_pyr, theta, cfg)) for theta in ORIENTATIONS_DEG]
    orient_pyrs = dict(zip(ORIENTATIONS_DEG, _run_jobs(orient_jobs, threads)))

    fm = compute_feature_maps(int_pyr, r_pyr, g_pyr, b_pyr, y_pyr, orient_pyrs, threads)
    cm = conspicuity_maps(fm, (w, h), cfg, threads)
    sal = saliency_map(cm)
    return SaliencyOutput(
        salience=sal,
        conspicuity=cm,
        features=fm,
        input_dims=(w, h),
        fusion_dims=level_dims(w, h, cfg.fusion_scale),
    )


def _run_jobs(jobs, threads: int):
    """Run (fn, args) jobs, optionally on a pool; results keep job order."""
    if threads <= 1 or len(jobs) <= 1:
        return [fn(*args) for fn, args in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, *args) for fn, args in jobs]
        return [f.result() for f in futures]
