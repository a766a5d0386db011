import math

import numpy as np
import pytest

from eagleeye.gimbal import (
    CameraGeometry,
    ServoConfig,
    angles_to_pwm,
    partition_fov,
    pwm_to_angles,
    region_to_angles,
)
from eagleeye.simulate import (
    SimScene,
    TargetSpec,
    cell_center_world,
    demo_scene,
    predict_area_fraction,
    project_point,
    render_view,
    run_closed_loop,
    target_area_fraction,
    target_sized_for_fraction,
)

GEOM = CameraGeometry()


def coverage_centroid(view):
    ys, xs = np.nonzero(view.target_coverage)
    w = view.target_coverage[ys, xs]
    return (xs * w).sum() / w.sum(), (ys * w).sum() / w.sum()


def test_boresight_target_renders_centered():
    scene = SimScene(
        background="constant",
        targets=(TargetSpec(center_m=(0.0, 0.0), size_m=(0.8, 0.8)),),
    )
    view = render_view(scene, GEOM, "short")
    cx, cy = coverage_centroid(view)
    assert abs(cx - (GEOM.width - 1) / 2) <= 0.5
    assert abs(cy - (GEOM.height - 1) / 2) <= 0.5
    assert not view.away


def test_doubling_distance_halves_blob_size():
    sizes = []
    for d in (8.0, 16.0):
        scene = SimScene(
            plane_distance_m=d,
            background="constant",
            targets=(TargetSpec(center_m=(0.0, 0.0), size_m=(1.0, 1.0)),),
        )
        view = render_view(scene, GEOM, "short")
        area = view.target_coverage.sum()
        sizes.append(math.sqrt(area))  # linear pixel size
    assert sizes[0] / sizes[1] == pytest.approx(2.0, rel=0.01)


def test_short_long_scale_ratio_matches_prediction():
    scene = SimScene(
        background="constant",
        targets=(TargetSpec(center_m=(0.0, 0.0), size_m=(0.6, 0.6)),),
    )
    wide = render_view(scene, GEOM, "short")
    narrow = render_view(scene, GEOM, "long")
    ratio = math.sqrt(narrow.target_coverage.sum() / wide.target_coverage.sum())
    want = math.tan(math.radians(50.0)) / math.tan(math.radians(10.0))
    assert ratio == pytest.approx(want, rel=0.02)


def test_pose_away_from_plane_flags():
    scene = SimScene(background="constant", targets=())
    view = render_view(scene, GEOM, "long", (150.0, 0.0))
    assert view.away
    assert np.allclose(view.image, scene.base_gray)
    assert view.target_coverage.max() == 0.0


def test_area_fraction_empty_and_quarter():
    scene = SimScene(background="constant", targets=())
    view = render_view(scene, GEOM, "short")
    assert target_area_fraction(view, scene) == 0.0

    d = 10.0
    tan_h, tan_v = GEOM.half_tangents("short")
    quarter = TargetSpec(
        center_m=(0.0, 0.0),
        size_m=(d * tan_h, d * tan_v),  # half width x half height of the view
        shape="rect",
        color=(0.2, 0.2, 0.9),
    )
    view = render_view(SimScene(plane_distance_m=d, background="constant",
                                targets=(quarter,)), GEOM, "short")
    assert target_area_fraction(view) == pytest.approx(0.25, abs=0.005)


def test_render_deterministic():
    scene = demo_scene(GEOM)
    a = render_view(scene, GEOM, "short")
    b = render_view(scene, GEOM, "short")
    assert np.array_equal(a.image, b.image)
    assert np.array_equal(a.target_coverage, b.target_coverage)


def test_noise_background_seed_dependence():
    base = dict(background="noise", targets=())
    a = render_view(SimScene(seed=1, **base), GEOM, "short")
    b = render_view(SimScene(seed=1, **base), GEOM, "short")
    c = render_view(SimScene(seed=2, **base), GEOM, "short")
    assert np.array_equal(a.image, b.image)
    assert not np.array_equal(a.image, c.image)
    assert a.image.min() >= 0.0 and a.image.max() <= 1.0


def test_project_point_roundtrip_with_renderer():
    # a small target rendered where project_point says it should be
    world = cell_center_world(GEOM, (1, 4), 10.0)
    scene = SimScene(background="constant",
                     targets=(TargetSpec(center_m=world, size_m=(0.5, 0.5)),))
    view = render_view(scene, GEOM, "short")
    px, py, visible = project_point(GEOM, "short", (0.0, 0.0), world, 10.0)
    assert visible
    cx, cy = coverage_centroid(view)
    assert abs(px - cx) <= 0.5 and abs(py - cy) <= 0.5


def test_demo_scene_fraction_band():
    scene = demo_scene(GEOM)
    view = render_view(scene, GEOM, "short")
    frac = target_area_fraction(view, scene)
    assert 0.004 <= frac <= 0.005
    assert predict_area_fraction(scene, GEOM, "short") == pytest.approx(0.0045, rel=1e-9)


def test_steering_correctness_exact_pose():
    """With exact (unquantized) angles, all 36 cell-center targets land
    within 1 px of the narrow camera's image center."""
    part = partition_fov((GEOM.width, GEOM.height))
    distance = 100.0
    worst = 0.0
    for i in range(6):
        for j in range(6):
            world = cell_center_world(GEOM, (i, j), distance)
            pan, tilt = region_to_angles((i, j), part, GEOM, range_m=distance)
            px, py, visible = project_point(GEOM, "long", (pan, tilt), world, distance)
            assert visible
            worst = max(worst, math.hypot(px - (GEOM.width - 1) / 2,
                                          py - (GEOM.height - 1) / 2))
    assert worst <= 1.0


def test_steering_offset_without_correction_matches_parallax():
    part = partition_fov((GEOM.width, GEOM.height))
    distance = 100.0
    world = cell_center_world(GEOM, (2, 3), distance)
    pan, tilt = region_to_angles((2, 3), part, GEOM)  # correction off
    px, py, _ = project_point(GEOM, "long", (pan, tilt), world, distance)
    # predicted vertical offset: the height offset over the range, mapped
    # through the narrow camera's pixels-per-tangent scale
    tan_v = GEOM.half_tangents("long")[1]
    predict = (GEOM.vertical_offset_m / distance) * GEOM.height / (2.0 * tan_v)
    assert py - (GEOM.height - 1) / 2 == pytest.approx(predict, abs=0.1)
    assert abs(px - (GEOM.width - 1) / 2) <= 0.1


def test_steering_through_pwm_within_quantization_bound():
    """Through the quantized PWM path the residual equals the decode error
    mapped through the tangent geometry (plus sub-pixel slack)."""
    servo = ServoConfig()
    part = partition_fov((GEOM.width, GEOM.height))
    distance = 200.0
    for cell in [(0, 0), (5, 5), (4, 2), (3, 3)]:
        world = cell_center_world(GEOM, cell, distance)
        pan, tilt = region_to_angles(cell, part, GEOM, range_m=distance)
        cmd = angles_to_pwm(pan, tilt, servo)
        qpan, qtilt = pwm_to_angles(cmd, servo)
        px, py, _ = project_point(GEOM, "long", (qpan, qtilt), world, distance)
        ex, ey, _ = project_point(GEOM, "long", (pan, tilt), world, distance)
        tan_hl, tan_vl = GEOM.half_tangents("long")
        bound_x = (
            abs(math.tan(math.radians(qpan)) - math.tan(math.radians(pan)))
            / math.cos(math.radians(pan)) ** 0  # tangent difference is exact
            * GEOM.width / (2.0 * tan_hl)
        )
        bound_y = (
            abs(math.tan(math.radians(qtilt)) - math.tan(math.radians(tilt)))
            * GEOM.height / (2.0 * tan_vl)
        )
        assert abs(px - ex) <= bound_x + 0.5
        assert abs(py - ey) <= bound_y + 0.5


def test_closed_loop_near_boresight_cell():
    scene = demo_scene(GEOM, cell=(3, 3), seed=5)
    report = run_closed_loop(scene, GEOM, max_cycles=1)
    step = report.final_step
    assert step.detected
    assert step.region == (3, 3)
    assert math.hypot(*step.offset_px) < GEOM.width / 6.0


def test_closed_loop_detection_failure_on_blank_scene():
    scene = SimScene(background="constant", targets=())
    report = run_closed_loop(scene, GEOM, max_cycles=2)
    assert report.detection_failed
    assert not report.final_centered
    assert len(report.steps) == 1 and not report.steps[0].detected


def test_closed_loop_monotone_offsets():
    scene = demo_scene(GEOM, cell=(1, 2), seed=9)
    report = run_closed_loop(scene, GEOM, max_cycles=3)
    dists = [math.hypot(*s.offset_px) for s in report.steps if s.detected]
    assert len(dists) >= 2
    for a, b in zip(dists, dists[1:]):
        # slack covers the 1e-6 deg settle tolerance (~3e-5 px)
        assert b <= a + 1e-3


def test_closed_loop_deterministic():
    scene = demo_scene(GEOM, cell=(2, 4), seed=11)
    r1 = run_closed_loop(scene, GEOM, max_cycles=2)
    r2 = run_closed_loop(scene, GEOM, max_cycles=2)
    assert r1.trajectory == r2.trajectory
    assert len(r1.steps) == len(r2.steps)
    for a, b in zip(r1.steps, r2.steps):
        assert (a.point, a.region, a.pan_deg, a.tilt_deg, a.offset_px) == (
            b.point, b.region, b.pan_deg, b.tilt_deg, b.offset_px)


def test_closed_loop_amplification_matches_prediction():
    scene = demo_scene(GEOM, cell=(4, 2), seed=7)
    report = run_closed_loop(scene, GEOM, max_cycles=1, parallax_correction=True)
    step = report.final_step
    predicted = report.predicted_long_fraction
    assert step.long_area_fraction > 0.05
    assert step.long_area_fraction == pytest.approx(predicted, rel=0.05)
    assert report.predicted_short_fraction == pytest.approx(0.0045, rel=1e-6)


def test_parallax_correction_improves_centering():
    scene = demo_scene(GEOM, cell=(2, 2), seed=3, distance_m=5.0)
    off = run_closed_loop(scene, GEOM, max_cycles=1).final_step.offset_px
    on = run_closed_loop(scene, GEOM, max_cycles=1,
                         parallax_correction=True).final_step.offset_px
    assert abs(on[1]) < abs(off[1])


def test_scene_validation():
    with pytest.raises(ValueError):
        SimScene(plane_distance_m=-1.0)
    with pytest.raises(ValueError):
        SimScene(background="plasma")
    with pytest.raises(ValueError):
        TargetSpec(center_m=(0, 0), size_m=(0.0, 1.0))
    with pytest.raises(ValueError):
        TargetSpec(center_m=(0, 0), size_m=(1.0, 1.0), shape="triangle")


def test_target_sizing_helper():
    target = target_sized_for_fraction(GEOM, 10.0, 0.0045, cell=(4, 2))
    scene = SimScene(background="constant", targets=(target,))
    assert predict_area_fraction(scene, GEOM, "short") == pytest.approx(0.0045, rel=1e-9)


def test_closed_loop_rejects_out_of_view_target():
    scene = SimScene(
        background="constant",
        targets=(TargetSpec(center_m=(100.0, 0.0), size_m=(1.0, 1.0)),),
    )
    with pytest.raises(ValueError):
        run_closed_loop(scene, GEOM, max_cycles=1)
