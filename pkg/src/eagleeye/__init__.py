"""Dual-camera small-target search: bottom-up saliency, grid steering, and
a deterministic pinhole world simulator."""

from .gimbal import (
    CameraGeometry,
    FovPartition,
    GimbalState,
    PwmCommand,
    ServoConfig,
    angles_to_pwm,
    locate_region,
    partition_fov,
    pwm_to_angles,
    region_to_angles,
    settle_servo,
    step_servo,
)
from .localize import (
    SalientPoint,
    SalientRegion,
    SaliencyResult,
    export_gray,
    extract_salient_region,
    find_salient_point,
    locate_target,
)
from .saliency import (
    ConspicuityMaps,
    FeatureMapSet,
    PipelineConfig,
    SaliencyOutput,
    across_scale_add,
    broadly_tuned_colors,
    build_gabor_pyramid,
    build_gaussian_pyramid,
    center_surround,
    compute_feature_maps,
    compute_saliency,
    conspicuity_maps,
    gabor_kernel,
    hue_decoupled_channels,
    intensity_image,
    normalize_map,
    saliency_map,
)
from .simulate import (
    LoopReport,
    LoopStep,
    RenderedView,
    SimScene,
    TargetSpec,
    demo_scene,
    predict_area_fraction,
    project_point,
    render_view,
    run_closed_loop,
    target_area_fraction,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
