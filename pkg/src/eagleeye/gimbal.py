"""Field-of-view partitioning and pan-tilt steering for the narrow camera.

The wide camera's frame is split into a 6x6 grid; a detected pixel selects
a grid cell, the cell center maps to pan/tilt angles, the angles encode as
1 us-quantized servo pulses, and a first-order servo model with a slew-rate
limit tracks the command.

Angle convention: pan is positive toward increasing image x (right), tilt
is positive toward increasing image y (down the frame). The pair (pan,
tilt) parameterizes the boresight by its tangent offsets: the aimed
direction has horizontal slope tan(pan) and vertical slope tan(tilt)
relative to the wide camera's axis. The renderer in `simulate` uses the
same convention, which is what makes cell-center steering land the cell
center on the narrow camera's image center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class CameraGeometry:
    """Optics of the wide (short-focus) and narrow (long-focus) cameras.

    Angles of view are configured directly; focal lengths are carried for
    derived sensor sizing. Vertical FOVs default to a 4:3 tangent aspect of
    the horizontal ones. The narrow camera sits vertical_offset_m above the
    wide one.
    """

    short_hfov_deg: float = 100.0
    long_hfov_deg: float = 20.0
    short_vfov_deg: float = None
    long_vfov_deg: float = None
    width: int = 640
    height: int = 480
    short_focal_mm: float = 2.1
    long_focal_mm: float = 12.0
    vertical_offset_m: float = 0.03688

    def __post_init__(self):
        if self.short_vfov_deg is None:
            object.__setattr__(self, "short_vfov_deg", _vfov_from_hfov(self.short_hfov_deg))
        if self.long_vfov_deg is None:
            object.__setattr__(self, "long_vfov_deg", _vfov_from_hfov(self.long_hfov_deg))
        for name in ("short_hfov_deg", "long_hfov_deg", "short_vfov_deg", "long_vfov_deg"):
            v = getattr(self, name)
            if not 0.0 < v < 180.0:
                raise ValueError(f"{name} must be in (0, 180), got {v}")
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        if self.short_focal_mm <= 0 or self.long_focal_mm <= 0:
            raise ValueError("focal lengths must be positive")
        if self.vertical_offset_m < 0:
            raise ValueError("vertical offset must be non-negative")

    def half_tangents(self, which: str) -> tuple[float, float]:
        """(tan(hfov/2), tan(vfov/2)) for 'short' or 'long'."""
        if which == "short":
            h, v = self.short_hfov_deg, self.short_vfov_deg
        elif which == "long":
            h, v = self.long_hfov_deg, self.long_vfov_deg
        else:
            raise ValueError(f"unknown camera {which!r}; use 'short' or 'long'")
        return math.tan(math.radians(h / 2.0)), math.tan(math.radians(v / 2.0))

    def sensor_dims_mm(self, which: str) -> tuple[float, float]:
        th, tv = self.half_tangents(which)
        f = self.short_focal_mm if which == "short" else self.long_focal_mm
        return 2.0 * f * th, 2.0 * f * tv

    @property
    def fov_ratio(self) -> float:
        return self.short_hfov_deg / self.long_hfov_deg


def _vfov_from_hfov(hfov_deg: float) -> float:
    return math.degrees(2.0 * math.atan(0.75 * math.tan(math.radians(hfov_deg / 2.0))))


@dataclass(frozen=True)
class FovPartition:
    """Grid tiling of an image: every pixel belongs to exactly one cell."""

    width: int
    height: int
    cols: int = 6
    rows: int = 6

    def __post_init__(self):
        if self.width < self.cols or self.height < self.rows:
            raise ValueError(
                f"image {self.width}x{self.height} too small for a "
                f"{self.cols}x{self.rows} partition"
            )

    @property
    def cell_count(self) -> int:
        return self.cols * self.rows

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        self._check_region(i, j)
        return ((i + 0.5) * self.width / self.cols, (j + 0.5) * self.height / self.rows)

    def centers(self):
        return [
            (i, j, self.cell_center(i, j))
            for j in range(self.rows)
            for i in range(self.cols)
        ]

    def _check_region(self, i: int, j: int):
        if not (0 <= i < self.cols and 0 <= j < self.rows):
            raise ValueError(f"region ({i},{j}) outside {self.cols}x{self.rows} grid")


def partition_fov(dims: tuple[int, int], cols: int = 6, rows: int = 6) -> FovPartition:
    """Split a (width, height) frame into a cols x rows grid."""
    return FovPartition(width=int(dims[0]), height=int(dims[1]), cols=cols, rows=rows)


def locate_region(pt: tuple[float, float], part: FovPartition) -> tuple[int, int]:
    """Grid cell containing a pixel; right/bottom edges go to the last cell."""
    x, y = pt
    if not (0 <= x < part.width and 0 <= y < part.height):
        raise ValueError(f"point ({x},{y}) outside {part.width}x{part.height} image")
    i = min(int(math.floor(part.cols * x / part.width)), part.cols - 1)
    j = min(int(math.floor(part.rows * y / part.height)), part.rows - 1)
    return i, j


def tangent_angles(u: float, v: float, geom: CameraGeometry) -> tuple[float, float]:
    """Pan/tilt aiming at normalized wide-frame position (u, v) in [0, 1]^2.

    pan = atan((2u - 1) * tan(hfov/2)), tilt = atan((2v - 1) * tan(vfov/2)):
    the boresight's tangent offsets equal the point's position on the wide
    camera's tangent plane.
    """
    tan_h, tan_v = geom.half_tangents("short")
    pan = math.degrees(math.atan((2.0 * u - 1.0) * tan_h))
    tilt = math.degrees(math.atan((2.0 * v - 1.0) * tan_v))
    return pan, tilt


def region_to_angles(
    region: tuple[int, int],
    part: FovPartition,
    geom: CameraGeometry,
    range_m: float = None,
) -> tuple[float, float]:
    """Pan/tilt that aims the narrow camera at a grid cell's center.

    When a target range is supplied, the tilt is corrected for the camera
    height offset (tilt += atan(offset / range)).
    """
    i, j = region
    part._check_region(i, j)
    pan, tilt = tangent_angles((i + 0.5) / part.cols, (j + 0.5) / part.rows, geom)
    if range_m is not None:
        if range_m <= 0:
            raise ValueError("target range must be positive")
        tilt += math.degrees(math.atan(geom.vertical_offset_m / range_m))
    return pan, tilt


@dataclass(frozen=True)
class ServoConfig:
    """Pulse calibration plus dynamics of one pan/tilt servo pair."""

    pulse_min_us: int = 1000
    pulse_max_us: int = 2000
    pulse_center_us: int = 1500
    range_deg: float = 60.0       # angle at pulse_max_us
    limit_deg: float = 60.0       # mechanical travel
    tau_s: float = 0.030
    slew_dps: float = 500.0
    frame_period_s: float = 0.020
    settle_tol_deg: float = 1e-6
    settle_timeout_s: float = 1.0

    def __post_init__(self):
        if not self.pulse_min_us < self.pulse_center_us < self.pulse_max_us:
            raise ValueError("pulse bounds must satisfy min < center < max")
        if self.range_deg <= 0 or self.limit_deg <= 0:
            raise ValueError("angle ranges must be positive")
        if self.tau_s <= 0 or self.slew_dps <= 0 or self.frame_period_s <= 0:
            raise ValueError("servo dynamics parameters must be positive")


@dataclass(frozen=True)
class PwmCommand:
    pan_pulse_us: int
    tilt_pulse_us: int
    frame_period_ms: float = 20.0
    saturated: bool = False


@dataclass(frozen=True)
class GimbalState:
    pan_deg: float = 0.0
    tilt_deg: float = 0.0
    pan_cmd_deg: float = 0.0
    tilt_cmd_deg: float = 0.0


def angles_to_pwm(pan_deg: float, tilt_deg: float, servo: ServoConfig) -> PwmCommand:
    """Linear angle-to-pulse map, 1 us resolution; out-of-range saturates."""
    saturated = abs(pan_deg) > servo.range_deg or abs(tilt_deg) > servo.range_deg

    def encode(angle):
        angle = min(max(angle, -servo.range_deg), servo.range_deg)
        span = servo.pulse_max_us - servo.pulse_center_us
        pulse = servo.pulse_center_us + span * angle / servo.range_deg
        pulse = int(math.floor(pulse + 0.5))
        return min(max(pulse, servo.pulse_min_us), servo.pulse_max_us)

    return PwmCommand(
        pan_pulse_us=encode(pan_deg),
        tilt_pulse_us=encode(tilt_deg),
        frame_period_ms=servo.frame_period_s * 1000.0,
        saturated=saturated,
    )


def pwm_to_angles(cmd: PwmCommand, servo: ServoConfig) -> tuple[float, float]:
    """Inverse of angles_to_pwm (before quantization)."""

    def decode(pulse):
        pulse = min(max(pulse, servo.pulse_min_us), servo.pulse_max_us)
        span = servo.pulse_max_us - servo.pulse_center_us
        return (pulse - servo.pulse_center_us) * servo.range_deg / span

    return decode(cmd.pan_pulse_us), decode(cmd.tilt_pulse_us)


def step_servo(state: GimbalState, cmd: PwmCommand, dt: float, servo: ServoConfig) -> GimbalState:
    """Advance the gimbal by dt toward the decoded command.

    Each axis follows a first-order lag (time constant tau) whose per-step
    motion is capped by the slew-rate limit; angles are clamped to the
    mechanical travel.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    target_pan, target_tilt = pwm_to_angles(cmd, servo)
    target_pan = min(max(target_pan, -servo.limit_deg), servo.limit_deg)
    target_tilt = min(max(target_tilt, -servo.limit_deg), servo.limit_deg)
    gain = 1.0 - math.exp(-dt / servo.tau_s)
    max_move = servo.slew_dps * dt

    def advance(current, target):
        move = (target - current) * gain
        move = min(max(move, -max_move), max_move)
        return min(max(current + move, -servo.limit_deg), servo.limit_deg)

    return GimbalState(
        pan_deg=advance(state.pan_deg, target_pan),
        tilt_deg=advance(state.tilt_deg, target_tilt),
        pan_cmd_deg=target_pan,
        tilt_cmd_deg=target_tilt,
    )


def settle_servo(state: GimbalState, cmd: PwmCommand, servo: ServoConfig, t0: float = 0.0):
    """Step at the command rate until both axes sit within the settle
    tolerance of the decoded target (or the timeout elapses).

    Returns (final state, settled flag, trajectory) where the trajectory
    rows are (t_s, pan_pulse_us, tilt_pulse_us, pan_deg, tilt_deg).
    """
    dt = servo.frame_period_s
    steps = max(1, int(round(servo.settle_timeout_s / dt)))
    trajectory = []
    settled = False
    t = t0
    for _ in range(steps):
        state = step_servo(state, cmd, dt, servo)
        t += dt
        trajectory.append((t, cmd.pan_pulse_us, cmd.tilt_pulse_us, state.pan_deg, state.tilt_deg))
        if (
            abs(state.pan_deg - state.pan_cmd_deg) <= servo.settle_tol_deg
            and abs(state.tilt_deg - state.tilt_cmd_deg) <= servo.settle_tol_deg
        ):
            settled = True
            break
    return state, settled, trajectory


def nudge_state(state: GimbalState, **changes) -> GimbalState:
    """Convenience for tests: copy a state with some fields replaced."""
    return replace(state, **changes)
