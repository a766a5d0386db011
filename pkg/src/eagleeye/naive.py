"""Reference saliency implementation built from explicit per-pixel loops.

This module re-derives every pipeline stage directly from its defining
formula, one pixel at a time, sharing no array code with the production
path in `saliency`. It exists to cross-check the vectorized pipeline:
both must agree to ~1e-6 relative error on the final map. The loops are
numba-compiled (no fastmath, so IEEE semantics are preserved) to keep the
check affordable.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .saliency import (
    CENTER_SCALES,
    ORIENTATIONS_DEG,
    PYRAMID_LEVELS,
    SURROUND_DELTAS,
    PipelineConfig,
)


@njit(cache=True)
def nv_intensity(img):
    h, w = img.shape[0], img.shape[1]
    out = np.empty((h, w))
    for y in range(h):
        for x in range(w):
            out[y, x] = (img[y, x, 0] + img[y, x, 1] + img[y, x, 2]) / 3.0
    return out


@njit(cache=True)
def nv_decouple(img, intens, threshold):
    h, w = intens.shape
    peak = intens[0, 0]
    for y in range(h):
        for x in range(w):
            if intens[y, x] > peak:
                peak = intens[y, x]
    cutoff = threshold * peak
    out = np.zeros((h, w, 3))
    for y in range(h):
        for x in range(w):
            if intens[y, x] > cutoff:
                for ch in range(3):
                    out[y, x, ch] = img[y, x, ch] / intens[y, x]
    return out


@njit(cache=True)
def nv_colors(rp, gp, bp):
    h, w = rp.shape
    out = np.empty((4, h, w))
    for y in range(h):
        for x in range(w):
            r = rp[y, x]
            g = gp[y, x]
            b = bp[y, x]
            red = r - (g + b) / 2.0
            green = g - (r + b) / 2.0
            blue = b - (r + g) / 2.0
            yellow = (r + g) / 2.0 - abs(r - g) / 2.0 - b
            out[0, y, x] = red if red > 0.0 else 0.0
            out[1, y, x] = green if green > 0.0 else 0.0
            out[2, y, x] = blue if blue > 0.0 else 0.0
            out[3, y, x] = yellow if yellow > 0.0 else 0.0
    return out


@njit(cache=True)
def nv_filter_separable(buf, taps):
    h, w = buf.shape
    half = taps.size // 2
    tmp = np.empty((h, w))
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for k in range(taps.size):
                yy = y + k - half
                if yy < 0:
                    yy = 0
                elif yy > h - 1:
                    yy = h - 1
                acc += taps[k] * buf[yy, x]
            tmp[y, x] = acc
    out = np.empty((h, w))
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for k in range(taps.size):
                xx = x + k - half
                if xx < 0:
                    xx = 0
                elif xx > w - 1:
                    xx = w - 1
                acc += taps[k] * tmp[y, xx]
            out[y, x] = acc
    return out


@njit(cache=True)
def nv_decimate2(buf):
    h, w = buf.shape
    ho = h if h == 1 else (h + 1) // 2
    wo = w if w == 1 else (w + 1) // 2
    out = np.empty((ho, wo))
    for y in range(ho):
        for x in range(wo):
            if h == 1:
                ya, yb, fy = 0, 0, 0.0
            elif h % 2 == 1:
                ya, yb, fy = 2 * y, 2 * y, 0.0
            else:
                ya, yb, fy = 2 * y, 2 * y + 1, 0.5
            if w == 1:
                xa, xb, fx = 0, 0, 0.0
            elif w % 2 == 1:
                xa, xb, fx = 2 * x, 2 * x, 0.0
            else:
                xa, xb, fx = 2 * x, 2 * x + 1, 0.5
            top = (1.0 - fx) * buf[ya, xa] + fx * buf[ya, xb]
            bot = (1.0 - fx) * buf[yb, xa] + fx * buf[yb, xb]
            out[y, x] = (1.0 - fy) * top + fy * bot
    return out


@njit(cache=True)
def nv_resize(buf, wo, ho):
    h, w = buf.shape
    out = np.empty((ho, wo))
    dy = 2 * ho
    dx = 2 * wo
    for y in range(ho):
        ny = (2 * y + 1) * h - ho
        iy = ny // dy
        ry = ny - iy * dy
        wy1 = ry / dy
        wy0 = (dy - ry) / dy
        ya = min(max(iy, 0), h - 1)
        yb = min(max(iy + 1, 0), h - 1)
        for x in range(wo):
            nx = (2 * x + 1) * w - wo
            ix = nx // dx
            rx = nx - ix * dx
            wx1 = rx / dx
            wx0 = (dx - rx) / dx
            xa = min(max(ix, 0), w - 1)
            xb = min(max(ix + 1, 0), w - 1)
            row_a = buf[ya, xa] * wy0 + buf[yb, xa] * wy1
            row_b = buf[ya, xb] * wy0 + buf[yb, xb] * wy1
            out[y, x] = row_a * wx0 + row_b * wx1
    return out


@njit(cache=True)
def nv_convolve2d(buf, kern):
    h, w = buf.shape
    kh, kw = kern.shape
    hy, hx = kh // 2, kw // 2
    out = np.empty((h, w))
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for ky in range(kh):
                yy = y + ky - hy
                if yy < 0:
                    yy = 0
                elif yy > h - 1:
                    yy = h - 1
                for kx in range(kw):
                    xx = x + kx - hx
                    if xx < 0:
                        xx = 0
                    elif xx > w - 1:
                        xx = w - 1
                    acc += kern[ky, kx] * buf[yy, xx]
            out[y, x] = acc
    return out


@njit(cache=True)
def nv_center_surround(center, surround):
    h, w = center.shape
    lifted = nv_resize(surround, w, h)
    out = np.empty((h, w))
    for y in range(h):
        for x in range(w):
            out[y, x] = abs(center[y, x] - lifted[y, x])
    return out


@njit(cache=True)
def nv_normalize(m):
    h, w = m.shape
    lo = m[0, 0]
    hi = m[0, 0]
    for y in range(h):
        for x in range(w):
            v = m[y, x]
            if v < lo:
                lo = v
            if v > hi:
                hi = v
    out = np.zeros((h, w))
    if hi == lo:
        return out
    span = hi - lo
    for y in range(h):
        for x in range(w):
            out[y, x] = (m[y, x] - lo) / span
    # first global max in row-major order
    gy, gx = 0, 0
    best = out[0, 0]
    for y in range(h):
        for x in range(w):
            if out[y, x] > best:
                best = out[y, x]
                gy, gx = y, x
    total = 0.0
    count = 0
    for y in range(h):
        for x in range(w):
            if y == gy and x == gx:
                continue
            v = out[y, x]
            is_peak = True
            for ddy in range(-1, 2):
                for ddx in range(-1, 2):
                    if ddy == 0 and ddx == 0:
                        continue
                    yy = y + ddy
                    xx = x + ddx
                    if yy < 0 or yy >= h or xx < 0 or xx >= w:
                        continue
                    if not v > out[yy, xx]:
                        is_peak = False
                        break
                if not is_peak:
                    break
            if is_peak:
                total += v
                count += 1
    mean_other = total / count if count > 0 else 0.0
    factor = (1.0 - mean_other) ** 2
    for y in range(h):
        for x in range(w):
            out[y, x] *= factor
    return out


def nv_gabor_kernel(theta_deg: float, cfg: PipelineConfig) -> np.ndarray:
    size = cfg.gabor_kernel_px
    half = size // 2
    if theta_deg == 0.0:
        sin_t, cos_t = 0.0, 1.0
    elif theta_deg == 45.0:
        sin_t = cos_t = math.sqrt(0.5)
    elif theta_deg == 90.0:
        sin_t, cos_t = 1.0, 0.0
    elif theta_deg == 135.0:
        sin_t, cos_t = math.sqrt(0.5), -math.sqrt(0.5)
    else:
        raise ValueError("unsupported orientation")
    kern = np.empty((size, size))
    for row in range(size):
        for col in range(size):
            y = float(row - half)
            x = float(col - half)
            across = y * cos_t - x * sin_t
            along = y * sin_t + x * cos_t
            env = math.exp(
                -(across * across + cfg.gabor_aspect ** 2 * along * along)
                / (2.0 * cfg.gabor_sigma_px ** 2)
            )
            kern[row, col] = env * math.cos(
                abs(2.0 * math.pi * across / cfg.gabor_wavelength_px + cfg.gabor_phase_rad)
            )
    total = 0.0
    for row in range(size):
        for col in range(size):
            total += kern[row, col]
    return kern - total / (size * size)


def _pyramid(buf: np.ndarray, taps: np.ndarray) -> list[np.ndarray]:
    levels = [buf]
    for _ in range(PYRAMID_LEVELS - 1):
        levels.append(nv_decimate2(nv_filter_separable(levels[-1], taps)))
    return levels


def naive_saliency(img: np.ndarray, cfg: PipelineConfig = None) -> np.ndarray:
    """Whole-pipeline reference: returns the saliency map at the fusion scale."""
    return naive_stages(img, cfg)["salience"]


def naive_stages(img: np.ndarray, cfg: PipelineConfig = None) -> dict:
    """Reference pipeline keeping every stage for cross-checking: feature
    maps ('intensity', 'color_rg', 'color_by', 'orientation'), conspicuity
    channels ('ibar', 'cbar', 'obar') and the final 'salience' map."""
    cfg = (cfg or PipelineConfig()).validate()
    img = np.ascontiguousarray(img, dtype=np.float64)
    taps = cfg.downsample_taps

    intens = nv_intensity(img)
    dec = nv_decouple(img, intens, cfg.hue_decouple_threshold)

    int_pyr = _pyramid(intens, taps)
    rp_pyr = _pyramid(np.ascontiguousarray(dec[:, :, 0]), taps)
    gp_pyr = _pyramid(np.ascontiguousarray(dec[:, :, 1]), taps)
    bp_pyr = _pyramid(np.ascontiguousarray(dec[:, :, 2]), taps)

    rgby = [nv_colors(r, g, b) for r, g, b in zip(rp_pyr, gp_pyr, bp_pyr)]
    r_pyr = [lev[0] for lev in rgby]
    g_pyr = [lev[1] for lev in rgby]
    b_pyr = [lev[2] for lev in rgby]
    y_pyr = [lev[3] for lev in rgby]

    orient_pyrs = {}
    for theta in ORIENTATIONS_DEG:
        kern = nv_gabor_kernel(theta, cfg)
        orient_pyrs[theta] = [np.abs(nv_convolve2d(lev, kern)) for lev in int_pyr]

    pairs = [(c, c + d) for c in CENTER_SCALES for d in SURROUND_DELTAS]
    fm_int = {k: nv_center_surround(int_pyr[k[0]], int_pyr[k[1]]) for k in pairs}
    fm_rg = {
        (c, s): nv_center_surround(r_pyr[c] - g_pyr[c], g_pyr[s] - r_pyr[s])
        for c, s in pairs
    }
    fm_by = {
        (c, s): nv_center_surround(b_pyr[c] - y_pyr[c], y_pyr[s] - b_pyr[s])
        for c, s in pairs
    }
    fm_or = {
        (c, s, theta): nv_center_surround(orient_pyrs[theta][c], orient_pyrs[theta][s])
        for c, s in pairs
        for theta in ORIENTATIONS_DEG
    }

    h0, w0 = img.shape[:2]
    wf, hf = w0, h0
    for _ in range(cfg.fusion_scale):
        wf = max(1, (wf + 1) // 2)
        hf = max(1, (hf + 1) // 2)

    def fuse(maps):
        lifted = sorted((nv_resize(m, wf, hf) for m in maps), key=lambda a: a.tobytes())
        total = lifted[0].copy()
        for m in lifted[1:]:
            total = total + m
        return total

    ibar = fuse([nv_normalize(fm_int[k]) for k in pairs])
    cbar = fuse([nv_normalize(fm_rg[k]) + nv_normalize(fm_by[k]) for k in pairs])
    obar = None
    for theta in ORIENTATIONS_DEG:
        chan = nv_normalize(fuse([nv_normalize(fm_or[(c, s, theta)]) for c, s in pairs]))
        obar = chan if obar is None else obar + chan

    salience = (nv_normalize(ibar) + nv_normalize(cbar) + nv_normalize(obar)) / 3.0
    return {
        "intensity": fm_int,
        "color_rg": fm_rg,
        "color_by": fm_by,
        "orientation": fm_or,
        "ibar": ibar,
        "cbar": cbar,
        "obar": obar,
        "salience": salience,
    }
