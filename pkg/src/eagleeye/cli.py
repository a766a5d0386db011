"""Command line front end.

Subcommands:
  saliency  — run the attention pipeline on an image file, write the 8-bit
              saliency map, the salient point report, and a detection overlay
  simulate  — drive the dual-camera closed loop on a scene file (or the
              built-in 36-cell sweep) and write CSV reports plus figures
  selftest  — run the reference-equivalence and invariant suite

Exit codes: 0 success, 1 usage/config error, 2 I/O error, 3 detection
failure, 4 selftest failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .config import ConfigError, RunConfig, load_run_config, load_scene
from .localize import locate_target
from .netpbm import ImageFormatError, load_image, write_pgm, write_ppm
from .simulate import LoopReport, demo_scene, run_closed_loop

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_DETECTION = 3
EXIT_SELFTEST = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=None,
                        help="run configuration file (or $EAGLE_EYE_CONFIG)")
    common.add_argument("--out", metavar="DIR", default=None,
                        help="output directory (default: ./out)")
    common.add_argument("--seed", type=int, default=None,
                        help="override the scene / selftest seed")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads for the pipeline (bit-identical output)")

    parser = _Parser(prog="eagleeye", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("saliency", parents=[common],
                       help="saliency map + salient point/region for one image")
    p.add_argument("image", help="input image (.ppm/.pgm/.png)")

    p = sub.add_parser("simulate", parents=[common],
                       help="closed-loop dual-camera simulation")
    p.add_argument("scene", nargs="?", default=None,
                   help="scene file (omit when --sweep-cells or config provides one)")
    p.add_argument("--sweep-cells", action="store_true",
                   help="run the built-in 36-cell centering sweep")

    sub.add_parser("selftest", parents=[common],
                   help="run the built-in verification suite")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        run = load_run_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return EXIT_USAGE
        run.threads = args.threads
    if args.seed is not None:
        run.seed = args.seed
    out_dir = args.out or run.out_dir or "out"

    try:
        if args.command == "saliency":
            return _cmd_saliency(args.image, run, out_dir)
        if args.command == "simulate":
            return _cmd_simulate(args, run, out_dir, seed_given=args.seed is not None)
        return _cmd_selftest(run)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ImageFormatError as exc:
        print(f"image error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def _ensure_out(out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def _cmd_saliency(image_path: str, run: RunConfig, out_dir: str) -> int:
    from .figures import draw_detection_overlay, save_saliency_figure

    img = load_image(image_path)
    result = locate_target(img, run.pipeline, threads=run.threads)
    _ensure_out(out_dir)

    write_pgm(os.path.join(out_dir, "saliency.pgm"), result.gray_map)
    with open(os.path.join(out_dir, "point.txt"), "w", encoding="utf-8") as fh:
        fh.write(result.point.report_line() + "\n")
    overlay = draw_detection_overlay(img, result.point, result.region)
    write_ppm(os.path.join(out_dir, "region_overlay.ppm"), overlay)
    save_saliency_figure(
        os.path.join(out_dir, "saliency_figure.png"),
        img, result.gray_map, result.point, result.region,
    )

    print(result.point.report_line())
    cx, cy = result.region.centroid
    print(f"Region centroid: ({cx:.1f},{cy:.1f}), bbox: {result.region.bbox}, "
          f"area: {100.0 * result.region.area_fraction:.2f}%")
    print(f"Artifacts written to {out_dir}/")
    return EXIT_OK


def _cmd_simulate(args, run: RunConfig, out_dir: str, seed_given: bool) -> int:
    if args.sweep_cells:
        return _run_sweep(run, out_dir)
    scene_path = args.scene or run.scene_path
    if scene_path is None:
        raise UsageError("simulate needs a scene file (argument or [run] scene = ...)")
    scene = load_scene(scene_path, seed_override=run.seed if seed_given else None)
    return _run_simulation(scene, run, out_dir)


def _run_simulation(scene, run: RunConfig, out_dir: str) -> int:
    from .figures import save_loop_figure

    _ensure_out(out_dir)
    frames = {}

    def sink(cycle, name, array):
        frames[(cycle, name)] = array
        path = os.path.join(out_dir, f"step{cycle:02d}_{name}")
        if array.ndim == 3:
            write_ppm(path + ".ppm", array)
        else:
            write_pgm(path + ".pgm", array)

    report = run_closed_loop(
        scene,
        geom=run.geometry,
        pipeline=run.pipeline,
        servo=run.servo,
        max_cycles=run.max_cycles,
        parallax_correction=run.parallax_correction,
        threads=run.threads,
        frame_sink=sink,
    )

    _write_loop_csv(os.path.join(out_dir, "loop_report.csv"), report)
    _write_pwm_csv(os.path.join(out_dir, "pwm_log.csv"), report)
    summary = _loop_summary(report, run)
    with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(summary)
    last_cycle = report.steps[-1].index if report.steps else 0
    wide = frames.get((last_cycle, "wide"))
    narrow = frames.get((last_cycle, "long"))
    if wide is not None and narrow is None:
        narrow = np.zeros_like(wide)
    if wide is not None:
        save_loop_figure(os.path.join(out_dir, "report.png"),
                         report, wide, narrow, run.geometry)

    print(summary, end="")
    print(f"Artifacts written to {out_dir}/")
    return EXIT_DETECTION if report.detection_failed else EXIT_OK


def _run_sweep(run: RunConfig, out_dir: str) -> int:
    _ensure_out(out_dir)
    rows = []
    all_pass = True
    for j in range(6):
        for i in range(6):
            scene = demo_scene(run.geometry, cell=(i, j), seed=run.seed + 36 + 6 * j + i)
            report = run_closed_loop(
                scene, geom=run.geometry, pipeline=run.pipeline, servo=run.servo,
                max_cycles=1, parallax_correction=run.parallax_correction,
                threads=run.threads,
            )
            step = report.final_step
            off = step.offset_px if step and step.offset_px else (math.nan, math.nan)
            verdict = "PASS" if report.final_centered else "FAIL"
            all_pass &= report.final_centered
            rows.append((i, j, off[0], off[1], step.long_area_fraction if step else 0.0, verdict))
            print(f"cell ({i},{j}): offset ({off[0]:7.2f},{off[1]:7.2f}) px -> {verdict}")

    with open(os.path.join(out_dir, "sweep_report.csv"), "w", encoding="utf-8") as fh:
        fh.write("cell_i,cell_j,offset_px_x,offset_px_y,long_area_fraction,verdict\n")
        for i, j, ox, oy, frac, verdict in rows:
            fh.write(f"{i},{j},{ox:.3f},{oy:.3f},{frac:.8f},{verdict}\n")
    n_pass = sum(1 for r in rows if r[5] == "PASS")
    with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"cells passed: {n_pass}/36\nverdict: {'PASS' if all_pass else 'FAIL'}\n")
    print(f"cells passed: {n_pass}/36")
    return EXIT_OK if all_pass else EXIT_DETECTION


def _write_loop_csv(path: str, report: LoopReport) -> None:
    cols = ("step,detected,point_x,point_y,point_gray,region_i,region_j,"
            "pan_cmd_deg,tilt_cmd_deg,pan_pulse_us,tilt_pulse_us,pan_deg,tilt_deg,"
            "settled,short_area_fraction,long_area_fraction,offset_px_x,offset_px_y\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(cols)
        for s in report.steps:
            point = (s.point.x, s.point.y, s.point.gray) if s.point else ("", "", "")
            region = s.region if s.region else ("", "")
            offset = s.offset_px if s.offset_px else ("", "")
            fh.write(
                f"{s.index},{int(s.detected)},{point[0]},{point[1]},{point[2]},"
                f"{region[0]},{region[1]},"
                f"{s.pan_cmd_deg:.6f},{s.tilt_cmd_deg:.6f},"
                f"{s.pan_pulse_us},{s.tilt_pulse_us},"
                f"{s.pan_deg:.6f},{s.tilt_deg:.6f},{int(s.settled)},"
                f"{s.short_area_fraction:.8f},{s.long_area_fraction:.8f},"
                + (f"{offset[0]:.3f},{offset[1]:.3f}\n" if s.offset_px else ",\n")
            )


def _write_pwm_csv(path: str, report: LoopReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t_s,pan_pulse_us,tilt_pulse_us,pan_deg,tilt_deg\n")
        for t, pan_us, tilt_us, pan, tilt in report.trajectory:
            fh.write(f"{t:.6f},{pan_us},{tilt_us},{pan:.6f},{tilt:.6f}\n")


def _loop_summary(report: LoopReport, run: RunConfig) -> str:
    lines = [f"cycles run: {len(report.steps)}"]
    last = report.final_step
    if report.detection_failed or last is None or not last.detected:
        lines.append("detection: FAILED (no salient point above the noise floor)")
        lines.append("verdict: FAIL")
        return "\n".join(lines) + "\n"

    lines.append("detection: ok")
    lines.append(f"salient point: ({last.point.x},{last.point.y}) gray {last.point.gray}")
    lines.append(f"region: ({last.region[0]},{last.region[1]})")
    lines.append(f"commanded angles: pan {last.pan_cmd_deg:.6f} deg, "
                 f"tilt {last.tilt_cmd_deg:.6f} deg")
    lines.append(f"settled angles: pan {last.pan_deg:.6f} deg, tilt {last.tilt_deg:.6f} deg "
                 f"({'settled' if last.settled else 'timeout'})")
    short_pct = 100.0 * last.short_area_fraction
    long_pct = 100.0 * last.long_area_fraction
    if report.predicted_short_fraction is not None:
        lines.append(f"short-view target fraction: {short_pct:.4f}% "
                     f"(predicted {100.0 * report.predicted_short_fraction:.4f}%)")
        lines.append(f"long-view target fraction: {long_pct:.4f}% "
                     f"(predicted {100.0 * report.predicted_long_fraction:.4f}%)")
    else:
        lines.append(f"short-view target fraction: {short_pct:.4f}%")
        lines.append(f"long-view target fraction: {long_pct:.4f}%")
    if last.offset_px:
        lines.append(f"final target offset: ({last.offset_px[0]:.2f},{last.offset_px[1]:.2f}) px "
                     f"(center-third bound: +-{run.geometry.width / 6.0:.1f}, "
                     f"+-{run.geometry.height / 6.0:.1f})")
    lines.append(f"centering verdict: {'PASS' if report.final_centered else 'FAIL'}")
    return "\n".join(lines) + "\n"


def _cmd_selftest(run: RunConfig) -> int:
    from .selftest import run_selftest

    results = run_selftest(seed=run.seed, threads=run.threads)
    failed = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        failed += 0 if ok else 1
        print(f"{status}  {name}: {detail}")
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_SELFTEST


if __name__ == "__main__":
    sys.exit(main())
