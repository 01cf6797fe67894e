import logging
from pathlib import Path

import click

from app.characterisation.report_io import write_curve_csv
from app.cli import commands
from app.cli.command_decorator import handle_command_errors
from app.cli.utils.corpus_utils import curve_from_corpus, load_corpus

logger = logging.getLogger(__name__)


@commands.cli.command("analyze")
@click.argument("frames_dir", type=click.Path(file_okay=False, path_type=Path))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False, path_type=Path),
              help="Curve CSV to write.")
@click.option("--plane", type=click.Choice(["G1", "LUMA"]), default="G1", show_default=True,
              help="Plane the row-noise metric runs on.")
@handle_command_errors
def cmd_analyze(frames_dir, out_path, plane):
    """Recompute a characterisation curve from a directory of PGM frames."""
    curve = curve_from_corpus(load_corpus(frames_dir), plane)

    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(write_curve_csv(curve))
    logger.info(f"Wrote {len(curve.points)}-point curve from {frames_dir} to {out_path}.")
    click.echo(f"{len(curve.points)} points -> {out_path}")
