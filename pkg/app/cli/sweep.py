import logging
from pathlib import Path

import click
from flask import current_app

from app import __version__
from app.characterisation.report_io import (
    build_manifest,
    render_overlay_svg,
    write_curve_csv,
    write_json,
    write_manifest,
    write_ranges_csv,
)
from app.characterisation.sensor_model import new_sensor
from app.characterisation.sweep import (
    compare_runs,
    detect_critical_ranges,
    run_sweep,
    summarize_susceptibility,
)
from app.characterisation.utils.frame_utils import FrameDumper
from app.cli import commands
from app.cli.command_decorator import handle_command_errors
from app.cli.utils.config_utils import load_run_config, resolve_output_dir, with_run_seed

logger = logging.getLogger(__name__)


def _write_run(run_dir, sensor_config, sweep_config, curve, k):
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "curve.csv").write_bytes(write_curve_csv(curve))
    (run_dir / "manifest.json").write_bytes(
        write_manifest(build_manifest(sensor_config, sweep_config, __version__))
    )

    if len(curve.points) < 3:
        logger.warning(f"Curve in {run_dir} has {len(curve.points)} point(s); skipping critical-range detection.")
        ranges = []
    else:
        ranges = detect_critical_ranges(curve, k)

    (run_dir / "ranges.csv").write_bytes(write_ranges_csv(ranges))
    (run_dir / "ranges.json").write_bytes(write_json(summarize_susceptibility(curve, ranges, k)))
    return ranges


@commands.cli.command("sweep")
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False, path_type=Path),
              help="TOML run configuration.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path),
              help="Output directory, overrides output_dir of the configuration.")
@click.option("--repeat", default=1, show_default=True, type=click.IntRange(min=1),
              help="Number of runs; run i uses run_seed + i.")
@click.option("--seed", type=int, help="Run seed, overrides sweep.run_seed.")
@click.option("--dump-frames", is_flag=True, help="Save every captured frame as PGM plus sidecar.")
@click.option("--k", "k", type=float, help="Critical-range threshold multiplier.")
@click.option("--log-x", is_flag=True, help="Logarithmic frequency axis in plot.svg.")
@handle_command_errors
def cmd_sweep(config_path, out_dir, repeat, seed, dump_frames, k, log_x):
    """Run a supply-noise characterisation sweep and write its reports."""
    run_config = load_run_config(config_path)
    out_dir = resolve_output_dir(out_dir, run_config)
    k = current_app.config["CRITICAL_RANGE_K"] if k is None else k
    executor = current_app.extensions["step_executor"]

    sensor = new_sensor(run_config.sensor)
    base_seed = run_config.sweep.run_seed if seed is None else seed

    curves = []
    first_ranges = []
    for run in range(repeat):
        sweep_config = with_run_seed(run_config.sweep, base_seed + run)
        run_dir = out_dir if repeat == 1 else out_dir / f"run{run}"
        sink = FrameDumper(run_dir / "frames") if dump_frames else None

        curve = run_sweep(sensor, sweep_config, executor=executor, frame_sink=sink)
        ranges = _write_run(run_dir, run_config.sensor, sweep_config, curve, k)
        if run == 0:
            first_ranges = ranges

        curves.append(curve)
        click.echo(f"run {run}: seed {sweep_config.run_seed}, {len(curve.points)} points, "
                   f"{len(ranges)} critical range(s) -> {run_dir}")

    labels = [f"seed {curve.run_seed}" for curve in curves]
    (out_dir / "plot.svg").write_bytes(
        render_overlay_svg(curves, labels, ranges=first_ranges if repeat == 1 else None, log_x=log_x)
    )

    if repeat > 1:
        report = compare_runs(curves)
        (out_dir / "repeatability.json").write_bytes(write_json(report))
        click.echo(f"max relative deviation over {report.n_runs} runs: {report.max_relative_deviation:.6g}")

    logger.info(f"Sweep command finished, outputs in {out_dir}.")
