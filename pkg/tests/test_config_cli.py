import os

import numpy as np
import pytest

from eagleeye import cli
from eagleeye.config import ConfigError, load_run_config, load_scene, write_scene
from eagleeye.netpbm import load_image, read_netpbm, write_pgm, write_ppm
from eagleeye.simulate import SimScene, TargetSpec, demo_scene
from eagleeye.synth import dot_image


# --- netpbm -------------------------------------------------------------------

def test_ppm_pgm_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    rgb = rng.random((17, 23, 3))
    p = tmp_path / "a.ppm"
    write_ppm(p, rgb)
    back = read_netpbm(p)
    assert back.shape == (17, 23, 3)
    assert np.max(np.abs(back - rgb)) <= 0.5 / 255.0 + 1e-12

    gray = (rng.random((9, 11)) * 255).astype(np.uint8)
    g = tmp_path / "b.pgm"
    write_pgm(g, gray)
    assert np.array_equal((read_netpbm(g) * 255.0).round().astype(np.uint8), gray)


def test_pgm_loads_as_rgb(tmp_path):
    g = tmp_path / "c.pgm"
    write_pgm(g, np.full((4, 6), 128, dtype=np.uint8))
    img = load_image(g)
    assert img.shape == (4, 6, 3)
    assert np.all(img[:, :, 0] == img[:, :, 2])


def test_png_round_trip(tmp_path):
    rgb = dot_image(20, 14, (9, 6), radius=2)
    from PIL import Image

    Image.fromarray((rgb * 255).astype(np.uint8)).save(tmp_path / "d.png")
    back = load_image(tmp_path / "d.png")
    assert back.shape == (14, 20, 3)
    assert np.max(np.abs(back - rgb)) <= 1.0 / 255.0


def test_netpbm_header_comments(tmp_path):
    p = tmp_path / "e.pgm"
    p.write_bytes(b"P5\n# a comment\n3 2\n255\n" + bytes(range(6)))
    img = read_netpbm(p)
    assert img.shape == (2, 3)


# --- config -------------------------------------------------------------------

def test_config_defaults_without_file():
    run = load_run_config(None)
    assert run.pipeline.fusion_scale == 4
    assert run.geometry.width == 640
    assert run.threads == 1


def test_config_file_overrides(tmp_path):
    scene_path = tmp_path / "s.scene"
    write_scene(scene_path, SimScene(background="constant"))
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "[pipeline]\nfusion_scale = 3\n"
        "[camera]\nwidth = 320\nheight = 240\nshort_hfov_deg = 90\n"
        "[servo]\nrange_deg = 45\n"
        "[loop]\nmax_cycles = 2\nparallax_correction = true\n"
        f"[run]\nscene = {scene_path.name}\nseed = 5\nthreads = 2\n"
    )
    run = load_run_config(str(cfg))
    assert run.pipeline.fusion_scale == 3
    assert run.geometry.width == 320 and run.geometry.short_hfov_deg == 90.0
    assert run.servo.range_deg == 45.0
    assert run.max_cycles == 2 and run.parallax_correction
    assert run.seed == 5 and run.threads == 2
    assert run.scene_path == str(scene_path)


def test_config_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[pipeline]\nfusion_scle = 4\n")
    with pytest.raises(ConfigError):
        load_run_config(str(cfg))


def test_config_rejects_unknown_section(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[pipelines]\nfusion_scale = 4\n")
    with pytest.raises(ConfigError):
        load_run_config(str(cfg))


def test_config_rejects_invalid_fusion_scale(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[pipeline]\nfusion_scale = 99\n")
    with pytest.raises(ConfigError):
        load_run_config(str(cfg))


def test_config_env_fallback(tmp_path, monkeypatch):
    cfg = tmp_path / "env.cfg"
    cfg.write_text("[pipeline]\nfusion_scale = 5\n")
    monkeypatch.setenv("EAGLE_EYE_CONFIG", str(cfg))
    assert load_run_config(None).pipeline.fusion_scale == 5


def test_config_missing_scene_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[run]\nscene = nowhere.scene\n")
    with pytest.raises(ConfigError):
        load_run_config(str(cfg))


def test_scene_round_trip(tmp_path):
    scene = SimScene(
        plane_distance_m=12.0,
        background="gradient",
        seed=3,
        targets=(
            TargetSpec(center_m=(1.0, -2.0), size_m=(0.5, 0.7), shape="rect",
                       color=(0.1, 0.9, 0.2)),
            TargetSpec(center_m=(0.0, 0.0), size_m=(0.3, 0.3)),
        ),
    )
    p = tmp_path / "s.scene"
    write_scene(p, scene)
    assert load_scene(str(p)) == scene
    assert load_scene(str(p), seed_override=99).seed == 99


def test_scene_scalar_size(tmp_path):
    p = tmp_path / "s.scene"
    p.write_text("[scene]\nbackground = constant\n[target]\ncenter_m = 0 0\nsize_m = 0.4\n")
    scene = load_scene(str(p))
    assert scene.targets[0].size_m == (0.4, 0.4)


# --- cli ------------------------------------------------------------------------

def _read_all(out_dir):
    blobs = {}
    for name in sorted(os.listdir(out_dir)):
        with open(os.path.join(out_dir, name), "rb") as fh:
            blobs[name] = fh.read()
    return blobs


def test_cli_usage_error_exit_code():
    assert cli.main([]) == cli.EXIT_USAGE
    assert cli.main(["simulate"]) == cli.EXIT_USAGE  # no scene anywhere


def test_cli_bad_config_exit_code(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[pipeline]\nfusion_scale = 99\n")
    assert cli.main(["selftest", "--config", str(cfg)]) == cli.EXIT_USAGE


def test_cli_unreadable_image_exit_code(tmp_path):
    missing = tmp_path / "nope.ppm"
    assert cli.main(["saliency", str(missing), "--out", str(tmp_path / "o")]) == cli.EXIT_IO
    bad = tmp_path / "bad.ppm"
    bad.write_bytes(b"P6\n4 4\n255\nshort")
    assert cli.main(["saliency", str(bad), "--out", str(tmp_path / "o")]) == cli.EXIT_IO


def test_cli_saliency_outputs_and_determinism(tmp_path, capsys):
    img_path = tmp_path / "dot.ppm"
    write_ppm(img_path, dot_image(320, 240, (167, 119), radius=3))

    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert cli.main(["saliency", str(img_path), "--out", str(out1)]) == 0
    text = capsys.readouterr().out
    assert "Coordinate: (" in text and "Gray value: " in text

    point = (out1 / "point.txt").read_text()
    assert point.startswith("Coordinate: (") and ", Gray value: " in point
    for name in ("saliency.pgm", "point.txt", "region_overlay.ppm", "saliency_figure.png"):
        assert (out1 / name).is_file(), name

    # (167,119) lies on the fusion-scale sample grid of 320x240
    x, y = point.split("(")[1].split(")")[0].split(",")
    assert abs(int(x) - 167) <= 1 and abs(int(y) - 119) <= 1

    assert cli.main(["saliency", str(img_path), "--out", str(out2)]) == 0
    assert _read_all(out1) == _read_all(out2)


def test_cli_saliency_threads_identical(tmp_path):
    img_path = tmp_path / "dot.ppm"
    write_ppm(img_path, dot_image(160, 120, (87, 37), radius=3))
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["saliency", str(img_path), "--out", str(a)]) == 0
    assert cli.main(["saliency", str(img_path), "--out", str(b), "--threads", "4"]) == 0
    assert _read_all(a) == _read_all(b)


@pytest.fixture()
def small_cfg(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("[camera]\nwidth = 320\nheight = 240\n")
    return str(cfg)


def test_cli_simulate_scene(tmp_path, small_cfg, capsys):
    from eagleeye.gimbal import CameraGeometry

    scene_path = tmp_path / "demo.scene"
    write_scene(scene_path, demo_scene(CameraGeometry(width=320, height=240), cell=(1, 2)))
    out = tmp_path / "sim"
    code = cli.main(["simulate", str(scene_path), "--config", small_cfg, "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "centering verdict: PASS" in text
    for name in ("loop_report.csv", "pwm_log.csv", "summary.txt", "report.png",
                 "step00_wide.ppm", "step00_saliency.pgm", "step00_long.ppm"):
        assert (out / name).is_file(), name
    header = (out / "pwm_log.csv").read_text().splitlines()[0]
    assert header == "t_s,pan_pulse_us,tilt_pulse_us,pan_deg,tilt_deg"
    assert "region: (1,2)" in (out / "summary.txt").read_text()


def test_cli_simulate_rerun_byte_identical(tmp_path, small_cfg):
    from eagleeye.gimbal import CameraGeometry

    scene_path = tmp_path / "demo.scene"
    write_scene(scene_path, demo_scene(CameraGeometry(width=320, height=240)))
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert cli.main(["simulate", str(scene_path), "--config", small_cfg, "--out", str(a)]) == 0
    assert cli.main(["simulate", str(scene_path), "--config", small_cfg, "--out", str(b)]) == 0
    assert cli.main(["simulate", str(scene_path), "--config", small_cfg,
                     "--out", str(c), "--threads", "4"]) == 0
    assert _read_all(a) == _read_all(b)
    assert _read_all(a) == _read_all(c)


def test_cli_simulate_detection_failure(tmp_path, small_cfg):
    scene_path = tmp_path / "blank.scene"
    write_scene(scene_path, SimScene(background="constant"))
    out = tmp_path / "fail"
    code = cli.main(["simulate", str(scene_path), "--config", small_cfg, "--out", str(out)])
    assert code == cli.EXIT_DETECTION
    assert (out / "summary.txt").read_text().startswith("cycles run:")
    assert "FAIL" in (out / "summary.txt").read_text()


def test_cli_seed_override_changes_noise(tmp_path, small_cfg):
    from eagleeye.gimbal import CameraGeometry

    scene_path = tmp_path / "demo.scene"
    write_scene(scene_path, demo_scene(CameraGeometry(width=320, height=240)))
    a, b = tmp_path / "sa", tmp_path / "sb"
    assert cli.main(["simulate", str(scene_path), "--config", small_cfg,
                     "--out", str(a), "--seed", "1"]) == 0
    assert cli.main(["simulate", str(scene_path), "--config", small_cfg,
                     "--out", str(b), "--seed", "2"]) == 0
    assert _read_all(a)["step00_wide.ppm"] != _read_all(b)["step00_wide.ppm"]


def test_cli_selftest_deterministic_output(capsys):
    code1 = cli.main(["selftest"])
    out1 = capsys.readouterr().out
    code2 = cli.main(["selftest"])
    out2 = capsys.readouterr().out
    assert code1 == 0 and code2 == 0
    assert out1 == out2
    assert out1.count("PASS") >= 14


def test_run_config_dump_round_trip(tmp_path):
    from eagleeye.config import dump_run_config

    run = load_run_config(None)
    run.pipeline = run.pipeline.__class__(fusion_scale=3, gabor_sigma_px=2.0)
    run.max_cycles = 5
    path = tmp_path / "dump.cfg"
    dump_run_config(str(path), run)
    back = load_run_config(str(path))
    assert back.pipeline == run.pipeline
    assert back.geometry == run.geometry
    assert back.servo == run.servo
    assert back.max_cycles == 5
