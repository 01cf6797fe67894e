from pathlib import Path

import click
from flask import current_app

from app.characterisation.report_io import format_range_line, read_curve_csv
from app.characterisation.sweep import detect_critical_ranges
from app.cli import commands
from app.cli.command_decorator import handle_command_errors


@commands.cli.command("detect")
@click.argument("curve_csv", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--k", "k", type=float, help="Threshold multiplier.")
@handle_command_errors
def cmd_detect(curve_csv, k):
    """Print the critical ranges of a curve, one `f_low,f_high,peak_hz,peak_metric` line each."""
    k = current_app.config["CRITICAL_RANGE_K"] if k is None else k
    curve = read_curve_csv(curve_csv.read_bytes())
    for critical_range in detect_critical_ranges(curve, k):
        click.echo(format_range_line(critical_range))
