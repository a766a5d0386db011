"""Flat key=value configuration files with [section] headers.

Every key is enumerated here and validated on load; unknown sections or
keys are hard errors so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields

from .gimbal import CameraGeometry, ServoConfig
from .saliency import PipelineConfig
from .simulate import SimScene, TargetSpec

ENV_CONFIG = "EAGLE_EYE_CONFIG"


class ConfigError(ValueError):
    pass


def _to_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _to_floats(text: str) -> tuple[float, ...]:
    parts = text.replace(",", " ").split()
    if not parts:
        raise ConfigError("expected one or more numbers")
    return tuple(float(p) for p in parts)


_PIPELINE_KEYS = {
    "fusion_scale": int,
    "hue_decouple_threshold": float,
    "gabor_kernel_px": int,
    "gabor_wavelength_px": float,
    "gabor_sigma_px": float,
    "gabor_phase_rad": float,
    "gabor_aspect": float,
    "downsample_kernel": _to_floats,
}

_CAMERA_KEYS = {
    "short_hfov_deg": float,
    "long_hfov_deg": float,
    "short_vfov_deg": float,
    "long_vfov_deg": float,
    "width": int,
    "height": int,
    "short_focal_mm": float,
    "long_focal_mm": float,
    "vertical_offset_m": float,
}

_SERVO_KEYS = {
    "pulse_min_us": int,
    "pulse_max_us": int,
    "pulse_center_us": int,
    "range_deg": float,
    "limit_deg": float,
    "tau_s": float,
    "slew_dps": float,
    "frame_period_s": float,
    "settle_tol_deg": float,
    "settle_timeout_s": float,
}

_LOOP_KEYS = {
    "max_cycles": int,
    "parallax_correction": _to_bool,
}

_RUN_KEYS = {
    "scene": str,
    "out": str,
    "seed": int,
    "threads": int,
}

_SCENE_KEYS = {
    "plane_distance_m": float,
    "background": str,
    "base_gray": float,
    "noise_amplitude": float,
    "noise_scale_m": float,
    "seed": int,
}

_TARGET_KEYS = {
    "center_m": _to_floats,
    "size_m": _to_floats,
    "shape": str,
    "color": _to_floats,
}


@dataclass
class RunConfig:
    pipeline: PipelineConfig
    geometry: CameraGeometry
    servo: ServoConfig
    max_cycles: int = 3
    parallax_correction: bool = False
    scene_path: str = None
    out_dir: str = None
    seed: int = 0
    threads: int = 1


def _read_file(path: str) -> configparser.ConfigParser:
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parser


def _section_kwargs(parser, section: str, schema: dict, path: str) -> dict:
    kwargs = {}
    for key, raw in parser.items(section):
        if key not in schema:
            raise ConfigError(f"{path}: unknown key '{key}' in [{section}]")
        try:
            kwargs[key] = schema[key](raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{path}: bad value for '{key}' in [{section}]: {raw!r}") from exc
    return kwargs


def load_run_config(path: str = None) -> RunConfig:
    """Load a run configuration; missing path means all defaults.

    Falls back to the EAGLE_EYE_CONFIG environment variable when no path
    is given.
    """
    if path is None:
        path = os.environ.get(ENV_CONFIG) or None
    run = RunConfig(
        pipeline=PipelineConfig(),
        geometry=CameraGeometry(),
        servo=ServoConfig(),
    )
    if path is None:
        return run

    parser = _read_file(path)
    known = {"pipeline": _PIPELINE_KEYS, "camera": _CAMERA_KEYS, "servo": _SERVO_KEYS,
             "loop": _LOOP_KEYS, "run": _RUN_KEYS}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"{path}: unknown section [{section}]")

    try:
        if parser.has_section("pipeline"):
            run.pipeline = PipelineConfig(
                **_section_kwargs(parser, "pipeline", _PIPELINE_KEYS, path)
            ).validate()
        if parser.has_section("camera"):
            run.geometry = CameraGeometry(
                **_section_kwargs(parser, "camera", _CAMERA_KEYS, path)
            )
        if parser.has_section("servo"):
            run.servo = ServoConfig(**_section_kwargs(parser, "servo", _SERVO_KEYS, path))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    if parser.has_section("loop"):
        loop = _section_kwargs(parser, "loop", _LOOP_KEYS, path)
        run.max_cycles = loop.get("max_cycles", run.max_cycles)
        run.parallax_correction = loop.get("parallax_correction", run.parallax_correction)
        if run.max_cycles < 1:
            raise ConfigError(f"{path}: max_cycles must be >= 1")
    if parser.has_section("run"):
        rsec = _section_kwargs(parser, "run", _RUN_KEYS, path)
        run.scene_path = rsec.get("scene", run.scene_path)
        run.out_dir = rsec.get("out", run.out_dir)
        run.seed = rsec.get("seed", run.seed)
        run.threads = rsec.get("threads", run.threads)
        if run.threads < 1:
            raise ConfigError(f"{path}: threads must be >= 1")
        if run.scene_path is not None:
            base = os.path.dirname(os.path.abspath(path))
            run.scene_path = os.path.normpath(os.path.join(base, run.scene_path))
            if not os.path.isfile(run.scene_path):
                raise ConfigError(f"{path}: scene file not found: {run.scene_path}")
    return run


def load_scene(path: str, seed_override: int = None) -> SimScene:
    """Parse a scene file: one [scene] section plus [target], [target2], ..."""
    parser = _read_file(path)
    scene_kwargs = {}
    targets = []
    for section in parser.sections():
        if section == "scene":
            scene_kwargs = _section_kwargs(parser, "scene", _SCENE_KEYS, path)
        elif section == "target" or (section.startswith("target") and section[6:].isdigit()):
            targets.append(_parse_target(parser, section, path))
        else:
            raise ConfigError(f"{path}: unknown section [{section}]")
    if seed_override is not None:
        scene_kwargs["seed"] = seed_override
    try:
        return SimScene(targets=tuple(targets), **scene_kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_target(parser, section: str, path: str) -> TargetSpec:
    kw = _section_kwargs(parser, section, _TARGET_KEYS, path)
    if "center_m" not in kw or "size_m" not in kw:
        raise ConfigError(f"{path}: [{section}] needs center_m and size_m")
    center = kw["center_m"]
    if len(center) != 2:
        raise ConfigError(f"{path}: [{section}] center_m wants two numbers")
    size = kw["size_m"]
    if len(size) == 1:
        size = (size[0], size[0])
    elif len(size) != 2:
        raise ConfigError(f"{path}: [{section}] size_m wants one or two numbers")
    color = kw.get("color", (0.85, 0.10, 0.10))
    if len(color) != 3:
        raise ConfigError(f"{path}: [{section}] color wants three numbers")
    try:
        return TargetSpec(
            center_m=tuple(center),
            size_m=tuple(size),
            shape=kw.get("shape", "ellipse"),
            color=tuple(color),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: [{section}]: {exc}") from exc


def dump_run_config(path: str, run: RunConfig) -> None:
    """Serialize a run configuration back to the key=value format."""
    pipe, geom, servo = run.pipeline, run.geometry, run.servo
    kernel = " ".join(repr(t) for t in pipe.downsample_kernel)
    lines = [
        "[pipeline]",
        f"fusion_scale = {pipe.fusion_scale}",
        f"hue_decouple_threshold = {pipe.hue_decouple_threshold!r}",
        f"gabor_kernel_px = {pipe.gabor_kernel_px}",
        f"gabor_wavelength_px = {pipe.gabor_wavelength_px!r}",
        f"gabor_sigma_px = {pipe.gabor_sigma_px!r}",
        f"gabor_phase_rad = {pipe.gabor_phase_rad!r}",
        f"gabor_aspect = {pipe.gabor_aspect!r}",
        f"downsample_kernel = {kernel}",
        "[camera]",
        f"short_hfov_deg = {geom.short_hfov_deg!r}",
        f"long_hfov_deg = {geom.long_hfov_deg!r}",
        f"short_vfov_deg = {geom.short_vfov_deg!r}",
        f"long_vfov_deg = {geom.long_vfov_deg!r}",
        f"width = {geom.width}",
        f"height = {geom.height}",
        f"short_focal_mm = {geom.short_focal_mm!r}",
        f"long_focal_mm = {geom.long_focal_mm!r}",
        f"vertical_offset_m = {geom.vertical_offset_m!r}",
        "[servo]",
        f"pulse_min_us = {servo.pulse_min_us}",
        f"pulse_max_us = {servo.pulse_max_us}",
        f"pulse_center_us = {servo.pulse_center_us}",
        f"range_deg = {servo.range_deg!r}",
        f"limit_deg = {servo.limit_deg!r}",
        f"tau_s = {servo.tau_s!r}",
        f"slew_dps = {servo.slew_dps!r}",
        f"frame_period_s = {servo.frame_period_s!r}",
        f"settle_tol_deg = {servo.settle_tol_deg!r}",
        f"settle_timeout_s = {servo.settle_timeout_s!r}",
        "[loop]",
        f"max_cycles = {run.max_cycles}",
        f"parallax_correction = {'true' if run.parallax_correction else 'false'}",
        "[run]",
        f"seed = {run.seed}",
        f"threads = {run.threads}",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_scene(path: str, scene: SimScene) -> None:
    """Serialize a scene back to the key=value format."""
    lines = [
        "[scene]",
        f"plane_distance_m = {scene.plane_distance_m!r}",
        f"background = {scene.background}",
        f"base_gray = {scene.base_gray!r}",
        f"noise_amplitude = {scene.noise_amplitude!r}",
        f"noise_scale_m = {scene.noise_scale_m!r}",
        f"seed = {scene.seed}",
    ]
    for idx, t in enumerate(scene.targets):
        lines.append("[target]" if idx == 0 else f"[target{idx + 1}]")
        lines.append(f"center_m = {t.center_m[0]!r} {t.center_m[1]!r}")
        lines.append(f"size_m = {t.size_m[0]!r} {t.size_m[1]!r}")
        lines.append(f"shape = {t.shape}")
        lines.append(f"color = {t.color[0]!r} {t.color[1]!r} {t.color[2]!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
