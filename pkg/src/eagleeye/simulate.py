"""Deterministic stand-in for the physical dual-camera rig.

A fronto-parallel textured plane is imaged by two pinhole cameras: the wide
one fixed at the origin looking down +Z, the narrow one mounted
vertical_offset_m above it on the pan/tilt gimbal. Rendering casts one ray
per subsample (fixed 2x2 pattern), intersects the plane, and samples the
scene, so every frame is a pure function of (scene, geometry, pose).

`run_closed_loop` drives the full chain: render wide frame -> saliency ->
salient point -> grid cell -> pan/tilt command -> servo settling -> narrow
frame -> centering metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .gimbal import (
    CameraGeometry,
    GimbalState,
    ServoConfig,
    angles_to_pwm,
    locate_region,
    partition_fov,
    region_to_angles,
    settle_servo,
)
from .localize import SalientPoint, locate_target
from .saliency import PipelineConfig

BACKGROUNDS = ("constant", "gradient", "noise")
TARGET_SHAPES = ("ellipse", "rect")
SUBSAMPLE_OFFSETS = (0.25, 0.75)     # fixed 2x2 supersampling pattern
DETECTION_FLOOR = 1e-9               # max feature-map contrast of a blank scene


@dataclass(frozen=True)
class TargetSpec:
    center_m: tuple[float, float]
    size_m: tuple[float, float]
    shape: str = "ellipse"
    color: tuple[float, float, float] = (0.85, 0.10, 0.10)

    def __post_init__(self):
        if self.shape not in TARGET_SHAPES:
            raise ValueError(f"unknown target shape {self.shape!r}")
        if min(self.size_m) <= 0:
            raise ValueError("target size must be positive")
        if min(self.color) < 0 or max(self.color) > 1:
            raise ValueError("target color channels must lie in [0, 1]")

    def area_m2(self) -> float:
        sx, sy = self.size_m
        if self.shape == "ellipse":
            return math.pi * sx * sy / 4.0
        return sx * sy


@dataclass(frozen=True)
class SimScene:
    """Planar world: background texture plus colored targets at a fixed range."""

    plane_distance_m: float = 10.0
    background: str = "noise"
    base_gray: float = 0.5
    noise_amplitude: float = 0.1
    noise_scale_m: float = 0.5
    seed: int = 0
    targets: tuple[TargetSpec, ...] = ()

    def __post_init__(self):
        if self.plane_distance_m <= 0:
            raise ValueError("plane distance must be positive")
        if self.background not in BACKGROUNDS:
            raise ValueError(f"unknown background {self.background!r}")
        if not 0.0 <= self.base_gray <= 1.0:
            raise ValueError("base_gray must lie in [0, 1]")
        if self.noise_amplitude < 0 or self.noise_scale_m <= 0:
            raise ValueError("noise parameters must be positive")
        object.__setattr__(self, "targets", tuple(self.targets))


@dataclass
class RenderedView:
    image: np.ndarray            # (H, W, 3) float64 in [0, 1]
    target_coverage: np.ndarray  # (H, W) float64 in [0, 1], ground truth
    which: str
    pose_deg: tuple[float, float]
    away: bool = False


def camera_position(geom: CameraGeometry, which: str) -> np.ndarray:
    """World position; the narrow camera sits above the wide one (-Y is up)."""
    if which == "long":
        return np.array([0.0, -geom.vertical_offset_m, 0.0])
    return np.zeros(3)


def pose_faces_plane(pose_deg: tuple[float, float]) -> bool:
    """Whether a pan/tilt pose keeps the boresight in the forward hemisphere."""
    return abs(pose_deg[0]) < 90.0 and abs(pose_deg[1]) < 90.0


def camera_basis(pose_deg: tuple[float, float]):
    """(forward, right, down) unit vectors for a pan/tilt pose.

    The boresight has tangent offsets (tan(pan), tan(tilt)) from +Z; right
    stays horizontal (zero roll) and down completes the frame. Only defined
    for poses facing the forward hemisphere (|pan|, |tilt| < 90 deg).
    """
    pan, tilt = pose_deg
    f = np.array([math.tan(math.radians(pan)), math.tan(math.radians(tilt)), 1.0])
    f /= np.linalg.norm(f)
    r = np.array([f[2], 0.0, -f[0]])
    r /= np.linalg.norm(r)
    d = np.cross(f, r)
    return f, r, d


def _hash01(ix: np.ndarray, iy: np.ndarray, seed: int) -> np.ndarray:
    """Deterministic lattice hash -> [0, 1]; pure function of (ix, iy, seed)."""
    x = ix.astype(np.uint64)
    y = iy.astype(np.uint64)
    h = x * np.uint64(0x9E3779B185EBCA87)
    h ^= y * np.uint64(0xC2B2AE3D27D4EB4F)
    h ^= np.uint64((seed * 0x165667B19E3779F9) & 0xFFFFFFFFFFFFFFFF)
    h ^= h >> np.uint64(29)
    h *= np.uint64(0xBF58476D1CE4E5B9)
    h ^= h >> np.uint64(32)
    h *= np.uint64(0x94D049BB133111EB)
    h ^= h >> np.uint64(32)
    return (h & np.uint64(0xFFFFFF)).astype(np.float64) / float(0xFFFFFF)


def _smoothstep(t: np.ndarray) -> np.ndarray:
    return t * t * (3.0 - 2.0 * t)


def sample_background(scene: SimScene, wx: np.ndarray, wy: np.ndarray,
                      geom: CameraGeometry) -> np.ndarray:
    """Background lightness at world plane coordinates (meters)."""
    if scene.background == "constant":
        return np.full(wx.shape, scene.base_gray)
    if scene.background == "gradient":
        half = scene.plane_distance_m * geom.half_tangents("short")[0]
        ramp = np.clip(wx / half, -1.0, 1.0)
        return np.clip(scene.base_gray + scene.noise_amplitude * ramp, 0.0, 1.0)
    u = wx / scene.noise_scale_m
    v = wy / scene.noise_scale_m
    iu = np.floor(u).astype(np.int64)
    iv = np.floor(v).astype(np.int64)
    fu = _smoothstep(u - iu)
    fv = _smoothstep(v - iv)
    n00 = _hash01(iu, iv, scene.seed)
    n10 = _hash01(iu + 1, iv, scene.seed)
    n01 = _hash01(iu, iv + 1, scene.seed)
    n11 = _hash01(iu + 1, iv + 1, scene.seed)
    noise = (n00 * (1 - fu) + n10 * fu) * (1 - fv) + (n01 * (1 - fu) + n11 * fu) * fv
    value = scene.base_gray + scene.noise_amplitude * (2.0 * noise - 1.0)
    return np.clip(value, 0.0, 1.0)


def _target_mask(target: TargetSpec, wx: np.ndarray, wy: np.ndarray) -> np.ndarray:
    cx, cy = target.center_m
    sx, sy = target.size_m
    if target.shape == "ellipse":
        nx = (wx - cx) / (sx / 2.0)
        ny = (wy - cy) / (sy / 2.0)
        return nx * nx + ny * ny <= 1.0
    return (np.abs(wx - cx) <= sx / 2.0) & (np.abs(wy - cy) <= sy / 2.0)


def render_view(
    scene: SimScene,
    geom: CameraGeometry,
    which: str,
    pose_deg: tuple[float, float] = (0.0, 0.0),
) -> RenderedView:
    """Pinhole projection of the scene plane with 2x2 supersampling.

    A pose whose boresight points away from the plane yields a flat
    base-gray frame with the `away` flag set; individual rays that miss the
    plane (dz <= 0) also fall back to base gray.
    """
    w, h = geom.width, geom.height
    if not pose_faces_plane(pose_deg):
        flat = np.full((h, w, 3), scene.base_gray)
        return RenderedView(
            image=flat,
            target_coverage=np.zeros((h, w)),
            which=which,
            pose_deg=tuple(pose_deg),
            away=True,
        )
    tan_h, tan_v = geom.half_tangents(which)
    fwd, right, down = camera_basis(pose_deg)
    pos = camera_position(geom, which)

    image = np.zeros((h, w, 3))
    coverage = np.zeros((h, w))
    depth = scene.plane_distance_m - pos[2]
    for oy in SUBSAMPLE_OFFSETS:
        sy = ((np.arange(h) + oy) * (2.0 / h) - 1.0) * tan_v
        for ox in SUBSAMPLE_OFFSETS:
            sx = ((np.arange(w) + ox) * (2.0 / w) - 1.0) * tan_h
            dx = fwd[0] + sx[None, :] * right[0] + sy[:, None] * down[0]
            dy = fwd[1] + sx[None, :] * right[1] + sy[:, None] * down[1]
            dz = fwd[2] + sx[None, :] * right[2] + sy[:, None] * down[2]
            hit = dz > 1e-12
            t = np.where(hit, depth / np.where(hit, dz, 1.0), 0.0)
            wx = pos[0] + t * dx
            wy = pos[1] + t * dy

            sample = np.repeat(
                sample_background(scene, wx, wy, geom)[:, :, None], 3, axis=2
            )
            sub_cover = np.zeros((h, w))
            for target in scene.targets:
                inside = _target_mask(target, wx, wy) & hit
                sample[inside] = target.color
                sub_cover = np.where(inside, 1.0, sub_cover)
            sample[~hit] = scene.base_gray
            image += sample
            coverage += sub_cover
    n_sub = len(SUBSAMPLE_OFFSETS) ** 2
    return RenderedView(
        image=image / n_sub,
        target_coverage=coverage / n_sub,
        which=which,
        pose_deg=tuple(pose_deg),
        away=False,
    )


def project_point(
    geom: CameraGeometry,
    which: str,
    pose_deg: tuple[float, float],
    world_xy: tuple[float, float],
    distance_m: float,
):
    """Pixel coordinates of a world plane point; (px, py, visible)."""
    if not pose_faces_plane(pose_deg):
        return float("nan"), float("nan"), False
    fwd, right, down = camera_basis(pose_deg)
    pos = camera_position(geom, which)
    d = np.array([world_xy[0] - pos[0], world_xy[1] - pos[1], distance_m - pos[2]])
    t_f = float(d @ fwd)
    if t_f <= 0:
        return float("nan"), float("nan"), False
    tan_h, tan_v = geom.half_tangents(which)
    sx = float(d @ right) / t_f
    sy = float(d @ down) / t_f
    px = (sx / tan_h + 1.0) * geom.width / 2.0 - 0.5
    py = (sy / tan_v + 1.0) * geom.height / 2.0 - 0.5
    visible = -0.5 <= px < geom.width - 0.5 and -0.5 <= py < geom.height - 0.5
    return px, py, visible


def target_area_fraction(view: RenderedView, scene: SimScene = None) -> float:
    """Fraction of pixels whose dominant color source is a target.

    Uses the renderer's ground-truth coverage: a pixel counts when at least
    half of its subsamples hit a target.
    """
    if scene is not None and not scene.targets:
        return 0.0
    return float(np.mean(view.target_coverage >= 0.5))


def predict_area_fraction(scene: SimScene, geom: CameraGeometry, which: str,
                          target_index: int = 0, centered: bool = False) -> float:
    """Analytic pinhole prediction of a target's image-area fraction.

    In the wide view the fronto-parallel plane maps by a pure scaling, so
    the fraction is area / viewed-plane-area. For the narrow camera aimed
    at the target ("centered"), obliquity shrinks the apparent area by
    cos^3 of the target's off-axis angle.
    """
    target = scene.targets[target_index]
    d = scene.plane_distance_m
    tan_h, tan_v = geom.half_tangents(which)
    fraction = target.area_m2() / (4.0 * d * d * tan_h * tan_v)
    if centered:
        tx, ty = target.center_m
        cos_beta = d / math.sqrt(tx * tx + ty * ty + d * d)
        fraction *= cos_beta ** 3
    return fraction


@dataclass
class LoopStep:
    index: int
    detected: bool
    point: SalientPoint = None
    region: tuple[int, int] = None
    pan_cmd_deg: float = 0.0
    tilt_cmd_deg: float = 0.0
    pan_pulse_us: int = 0
    tilt_pulse_us: int = 0
    pan_deg: float = 0.0
    tilt_deg: float = 0.0
    settled: bool = False
    short_area_fraction: float = 0.0
    long_area_fraction: float = 0.0
    offset_px: tuple[float, float] = None


@dataclass
class LoopReport:
    steps: list = field(default_factory=list)
    trajectory: list = field(default_factory=list)
    detection_failed: bool = False
    final_centered: bool = False
    predicted_short_fraction: float = None
    predicted_long_fraction: float = None

    @property
    def final_step(self) -> LoopStep:
        return self.steps[-1] if self.steps else None


def run_closed_loop(
    scene: SimScene,
    geom: CameraGeometry = None,
    pipeline: PipelineConfig = None,
    servo: ServoConfig = None,
    max_cycles: int = 3,
    parallax_correction: bool = False,
    threads: int = 1,
    frame_sink=None,
) -> LoopReport:
    """Detect -> steer -> verify, one detection per servo-settle cycle.

    frame_sink, when given, is called as frame_sink(cycle, name, array) with
    the wide frame, saliency gray map, and narrow frame of every cycle.
    """
    geom = geom or CameraGeometry()
    pipeline = pipeline or PipelineConfig()
    servo = servo or ServoConfig()
    if max_cycles < 1:
        raise ValueError("max_cycles must be >= 1")

    part = partition_fov((geom.width, geom.height))
    state = GimbalState()
    report = LoopReport()
    if scene.targets:
        _, _, visible = project_point(
            geom, "short", (0.0, 0.0), scene.targets[0].center_m, scene.plane_distance_m
        )
        if not visible:
            raise ValueError("target starts outside the wide camera's field of view")
        report.predicted_short_fraction = predict_area_fraction(scene, geom, "short")
        report.predicted_long_fraction = predict_area_fraction(
            scene, geom, "long", centered=True
        )

    t_clock = 0.0
    prev_pulses = None
    for cycle in range(max_cycles):
        wide = render_view(scene, geom, "short", (0.0, 0.0))
        if frame_sink:
            frame_sink(cycle, "wide", wide.image)
        result = locate_target(wide.image, pipeline, threads=threads)
        if frame_sink:
            frame_sink(cycle, "saliency", result.gray_map)

        # no center-surround contrast anywhere (blank scene): the exported
        # map would only rescale float dust, so flag a failed detection
        fm = result.output.features
        contrast = max(
            max(float(m.max()) for m in maps.values())
            for maps in (fm.intensity, fm.color_rg, fm.color_by, fm.orientation)
        )
        if contrast <= DETECTION_FLOOR:
            report.detection_failed = True
            report.steps.append(LoopStep(
                index=cycle,
                detected=False,
                short_area_fraction=target_area_fraction(wide, scene),
                pan_deg=state.pan_deg,
                tilt_deg=state.tilt_deg,
            ))
            break

        region = locate_region((result.point.x, result.point.y), part)
        range_m = scene.plane_distance_m if parallax_correction else None
        pan_cmd, tilt_cmd = region_to_angles(region, part, geom, range_m=range_m)
        cmd = angles_to_pwm(pan_cmd, tilt_cmd, servo)
        state, settled, traj = settle_servo(state, cmd, servo, t0=t_clock)
        report.trajectory.extend(traj)
        t_clock = traj[-1][0] if traj else t_clock

        narrow = render_view(scene, geom, "long", (state.pan_deg, state.tilt_deg))
        if frame_sink:
            frame_sink(cycle, "long", narrow.image)

        offset = None
        if scene.targets:
            px, py, _ = project_point(
                geom, "long", (state.pan_deg, state.tilt_deg),
                scene.targets[0].center_m, scene.plane_distance_m,
            )
            if math.isfinite(px):
                offset = (px - (geom.width - 1) / 2.0, py - (geom.height - 1) / 2.0)

        report.steps.append(LoopStep(
            index=cycle,
            detected=True,
            point=result.point,
            region=region,
            pan_cmd_deg=pan_cmd,
            tilt_cmd_deg=tilt_cmd,
            pan_pulse_us=cmd.pan_pulse_us,
            tilt_pulse_us=cmd.tilt_pulse_us,
            pan_deg=state.pan_deg,
            tilt_deg=state.tilt_deg,
            settled=settled,
            short_area_fraction=target_area_fraction(wide, scene),
            long_area_fraction=target_area_fraction(narrow, scene),
            offset_px=offset,
        ))

        pulses = (cmd.pan_pulse_us, cmd.tilt_pulse_us)
        if pulses == prev_pulses:
            break
        prev_pulses = pulses

    last = report.final_step
    if last and last.detected and last.offset_px is not None:
        report.final_centered = (
            abs(last.offset_px[0]) <= geom.width / 6.0
            and abs(last.offset_px[1]) <= geom.height / 6.0
        )
    return report


def cell_center_world(geom: CameraGeometry, cell: tuple[int, int],
                      distance_m: float) -> tuple[float, float]:
    """World plane coordinates of a 6x6 grid cell's center."""
    part = partition_fov((geom.width, geom.height))
    tan_h, tan_v = geom.half_tangents("short")
    u = (cell[0] + 0.5) / part.cols
    v = (cell[1] + 0.5) / part.rows
    return ((2.0 * u - 1.0) * tan_h * distance_m, (2.0 * v - 1.0) * tan_v * distance_m)


def target_sized_for_fraction(
    geom: CameraGeometry,
    distance_m: float,
    fraction: float,
    cell: tuple[int, int] = (4, 2),
    color: tuple[float, float, float] = (0.85, 0.10, 0.10),
) -> TargetSpec:
    """Circular target whose wide-view area fraction is `fraction`."""
    tan_h, tan_v = geom.half_tangents("short")
    diameter = 4.0 * distance_m * math.sqrt(fraction * tan_h * tan_v / math.pi)
    center = cell_center_world(geom, cell, distance_m)
    return TargetSpec(center_m=center, size_m=(diameter, diameter), color=color)


def demo_scene(
    geom: CameraGeometry = None,
    distance_m: float = 10.0,
    fraction: float = 0.0045,
    cell: tuple[int, int] = (4, 2),
    seed: int = 7,
) -> SimScene:
    """Benchmark scene: a small (sub-0.5%) colored target on textured noise."""
    geom = geom or CameraGeometry()
    target = target_sized_for_fraction(geom, distance_m, fraction, cell)
    return SimScene(
        plane_distance_m=distance_m,
        background="noise",
        seed=seed,
        targets=(target,),
    )
