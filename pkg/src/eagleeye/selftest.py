"""Built-in verification suite for `eagleeye selftest`.

Cross-checks the vectorized pipeline against the loop-based reference and
exercises the structural invariants (pyramid dims, reflection symmetry,
partition arithmetic, servo behaviour, steering geometry). Each check
returns (name, passed, detail) so the CLI can print one line per check.
"""

from __future__ import annotations

import math

import numpy as np

from . import gimbal, localize, saliency, simulate, synth
from .raster import level_dims


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-12)
    return float(np.max(np.abs(a - b))) / scale


def check_oracle_equivalence(seed: int, images: int = 3, size: int = 64, threads: int = 1):
    from .naive import naive_saliency

    worst = 0.0
    for k in range(images):
        img = synth.random_rgb(seed + k, size, size)
        fast = saliency.compute_saliency(img, threads=threads).salience
        slow = naive_saliency(img)
        worst = max(worst, _rel_err(fast, slow))
    ok = worst <= 1e-6
    return ok, f"max relative error {worst:.3e} over {images} images (limit 1e-6)"


def check_pyramid_dims(seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(5):
        w = int(rng.integers(17, 260))
        h = int(rng.integers(17, 260))
        pyr = saliency.build_gaussian_pyramid(rng.random((h, w)))
        for k, lev in enumerate(pyr):
            want = level_dims(w, h, k)
            if (lev.shape[1], lev.shape[0]) != want:
                return False, f"level {k} of {w}x{h} is {lev.shape}, wanted {want}"
    return True, "ceil-halving law holds on 5 random sizes"


def check_self_difference(seed: int):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(5):
        a = rng.random((37, 53))
        worst = max(worst, float(np.max(saliency.center_surround(a, a))))
    return worst <= 1e-9, f"max |A (-) A| = {worst:.1e} (limit 1e-9)"


def check_non_negative(seed: int):
    out = saliency.compute_saliency(synth.random_rgb(seed, 64, 48))
    lows = [out.salience.min(), out.conspicuity.ibar.min(),
            out.conspicuity.cbar.min(), out.conspicuity.obar.min()]
    lows += [m.min() for m in out.features.intensity.values()]
    lows += [m.min() for m in out.features.orientation.values()]
    low = float(min(lows))
    return low >= 0.0, f"minimum over S, conspicuity and feature maps = {low:.1e}"


def check_grayscale_kill(seed: int):
    rng = np.random.default_rng(seed)
    gray = rng.random((48, 64))
    img = np.repeat(gray[:, :, None], 3, axis=2)
    peak = float(saliency.compute_saliency(img).conspicuity.cbar.max())
    return peak == 0.0, f"color conspicuity peak on a gray frame = {peak:.1e}"


def check_normalize_argmax(seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(10):
        m = rng.random((31, 29))
        if np.argmax(saliency.normalize_map(m)) != np.argmax(m):
            return False, "argmax moved under normalization"
    return True, "argmax preserved on 10 random maps"


def check_fusion_permutation(seed: int):
    rng = np.random.default_rng(seed)
    maps = [rng.random((9 + k, 11 + k)) for k in range(6)]
    base = saliency.across_scale_add(maps, (8, 7))
    for k in range(5):
        order = rng.permutation(len(maps))
        other = saliency.across_scale_add([maps[i] for i in order], (8, 7))
        if not np.array_equal(base, other):
            return False, f"permutation {order} changed the sum"
    return True, "bit-identical under 5 random permutations"


def check_reflection(seed: int):
    img = synth.random_rgb(seed, 96, 64)
    s = saliency.compute_saliency(img).salience
    s_mirror = saliency.compute_saliency(img[:, ::-1, :].copy()).salience
    diff = float(np.max(np.abs(s - s_mirror[:, ::-1])))
    return diff <= 1e-6, f"max |S - mirror(S(mirror))| = {diff:.3e} (limit 1e-6)"


def check_pop_out(seed: int):
    img, bbox = synth.bar_array_image()
    out = saliency.compute_saliency(img)
    gray = localize.export_gray(out.salience, out.input_dims)
    pt = localize.find_salient_point(gray)
    ok = bbox[0] <= pt.x <= bbox[2] and bbox[1] <= pt.y <= bbox[3]
    return ok, f"salient point ({pt.x},{pt.y}) vs odd-bar bbox {bbox}"


def check_partition(seed: int):
    part = gimbal.partition_fov((64, 48))
    counts = np.zeros((6, 6), dtype=int)
    for y in range(48):
        for x in range(64):
            i, j = gimbal.locate_region((x, y), part)
            if not (i * 64 <= 6 * x < (i + 1) * 64 and j * 48 <= 6 * y < (j + 1) * 48):
                return False, f"pixel ({x},{y}) landed in wrong cell ({i},{j})"
            counts[j, i] += 1
    if int(counts.sum()) != 64 * 48:
        return False, "partition does not cover the frame"
    big = gimbal.partition_fov((640, 480))
    for i, j, center in big.centers():
        if gimbal.locate_region(center, big) != (i, j):
            return False, f"cell center of ({i},{j}) mapped elsewhere"
    if gimbal.locate_region((522, 239), big) != (4, 2):
        return False, "(522,239) did not map to region (4,2)"
    return True, "exhaustive 64x48 membership, 36 centers, (522,239)->(4,2)"


def check_pwm_roundtrip(seed: int):
    servo = gimbal.ServoConfig()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for angle in rng.uniform(-servo.range_deg, servo.range_deg, 200):
        cmd = gimbal.angles_to_pwm(angle, -angle, servo)
        pan, tilt = gimbal.pwm_to_angles(cmd, servo)
        worst = max(worst, abs(pan - angle), abs(tilt + angle))
    return worst <= 0.12, f"max round-trip error {worst:.4f} deg (limit 0.12)"


def check_servo_trajectory(seed: int):
    servo = gimbal.ServoConfig()
    cmd = gimbal.angles_to_pwm(60.0, 0.0, servo)
    target = gimbal.pwm_to_angles(cmd, servo)[0]
    state = gimbal.GimbalState()
    dt = servo.frame_period_s
    rho = math.exp(-dt / servo.tau_s)
    gain = 1.0 - rho
    step_cap = servo.slew_dps * dt
    m = 0
    while (target - m * step_cap) * gain > step_cap:
        m += 1
    worst = 0.0
    prev = 0.0
    for k in range(1, 51):
        state = gimbal.step_servo(state, cmd, dt, servo)
        if k <= m:
            expect = k * step_cap
        else:
            expect = target - (target - m * step_cap) * rho ** (k - m)
        worst = max(worst, abs(state.pan_deg - expect))
        if state.pan_deg + 1e-12 < prev:
            return False, f"trajectory not monotone at step {k}"
        prev = state.pan_deg
    if abs(state.pan_deg - target) > 0.1:
        return False, f"did not converge: {state.pan_deg:.4f} vs {target:.4f}"
    return worst <= 1e-6, f"max deviation from closed form {worst:.2e} (limit 1e-6)"


def check_steering_geometry(seed: int):
    geom = gimbal.CameraGeometry()
    part = gimbal.partition_fov((geom.width, geom.height))
    distance = 100.0
    worst = 0.0
    for i in range(6):
        for j in range(6):
            world = simulate.cell_center_world(geom, (i, j), distance)
            pan, tilt = gimbal.region_to_angles((i, j), part, geom, range_m=distance)
            px, py, visible = simulate.project_point(
                geom, "long", (pan, tilt), world, distance
            )
            if not visible:
                return False, f"cell ({i},{j}) target not visible after steering"
            off = math.hypot(px - (geom.width - 1) / 2.0, py - (geom.height - 1) / 2.0)
            worst = max(worst, off)
    return worst <= 1.0, f"worst center offset {worst:.3f} px over 36 cells (limit 1)"


def check_thread_determinism(seed: int):
    img = synth.random_rgb(seed, 80, 60)
    a = saliency.compute_saliency(img, threads=1).salience
    b = saliency.compute_saliency(img, threads=4).salience
    return np.array_equal(a, b), "saliency bit-identical for threads=1 vs threads=4"


CHECKS = (
    ("oracle-equivalence", check_oracle_equivalence),
    ("pyramid-dimension-law", check_pyramid_dims),
    ("center-surround-self-zero", check_self_difference),
    ("non-negativity", check_non_negative),
    ("grayscale-color-kill", check_grayscale_kill),
    ("normalize-argmax", check_normalize_argmax),
    ("fusion-permutation", check_fusion_permutation),
    ("reflection-equivariance", check_reflection),
    ("orientation-pop-out", check_pop_out),
    ("fov-partition", check_partition),
    ("pwm-round-trip", check_pwm_roundtrip),
    ("servo-trajectory", check_servo_trajectory),
    ("steering-geometry", check_steering_geometry),
    ("thread-determinism", check_thread_determinism),
)


def run_selftest(seed: int = 0, threads: int = 1):
    """Run every check; returns a list of (name, ok, detail)."""
    results = []
    for name, fn in CHECKS:
        kwargs = {"threads": threads} if fn is check_oracle_equivalence else {}
        try:
            ok, detail = fn(seed, **kwargs)
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results
