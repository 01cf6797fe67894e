import logging
from pathlib import Path

import click
from flask import current_app

from app.characterisation.report_io import read_curve_csv, render_overlay_svg
from app.characterisation.sweep import detect_critical_ranges
from app.cli import commands
from app.cli.command_decorator import handle_command_errors

logger = logging.getLogger(__name__)


@commands.cli.command("plot")
@click.argument("curve_csvs", nargs=-1, required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--out", "out_svg", required=True, type=click.Path(dir_okay=False, path_type=Path),
              help="SVG file to write.")
@click.option("--label", "labels", multiple=True, help="Legend label, once per curve. Defaults to file names.")
@click.option("--log-x", is_flag=True, help="Logarithmic frequency axis.")
@click.option("--ranges", "shade_ranges", is_flag=True, help="Shade the critical ranges of the first curve.")
@click.option("--k", "k", type=float, help="Threshold multiplier used with --ranges.")
@handle_command_errors
def cmd_plot(curve_csvs, out_svg, labels, log_x, shade_ranges, k):
    """Overlay one or more curve CSVs in a single SVG chart."""
    curves = [read_curve_csv(path.read_bytes()) for path in curve_csvs]
    labels = list(labels) or [path.stem for path in curve_csvs]

    ranges = None
    if shade_ranges:
        k = current_app.config["CRITICAL_RANGE_K"] if k is None else k
        ranges = detect_critical_ranges(curves[0], k)

    svg = render_overlay_svg(curves, labels, ranges=ranges, log_x=log_x)
    out_svg.parent.mkdir(parents=True, exist_ok=True)
    out_svg.write_bytes(svg)
    logger.info(f"Rendered {len(curves)} curve(s) to {out_svg}.")
    click.echo(f"{len(curves)} curve(s) -> {out_svg}")
