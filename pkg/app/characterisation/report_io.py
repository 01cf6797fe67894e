import csv
import hashlib
import io
import logging
from datetime import datetime, timezone

import matplotlib
import msgspec
from matplotlib.figure import Figure

from app.characterisation.errors import CurveFormatError, RenderError
from app.characterisation.utils.common_utils import format_float
from app.models import CharacterisationCurve, MetricSummary, RunManifest

logger = logging.getLogger(__name__)

CURVE_HEADER = ["frequency_hz", "mean_metric_dn", "std_metric_dn", "n_frames"]
RANGE_HEADER = ["f_low_hz", "f_high_hz", "peak_hz", "peak_metric"]

_SVG_RC = {
    "svg.hashsalt": "supply-noise-characterisation",
    "svg.fonttype": "none",
}


def config_fingerprint(sensor_config, sweep_config):
    """
    Digests both configurations.

    Args:
        sensor_config (SensorConfig): Sensor echo.
        sweep_config (SweepConfig): Sweep echo.

    Returns:
        str: SHA-256 hex digest of their deterministic JSON serialisation.
    """
    canonical = msgspec.json.encode(
        {"sensor": _normalised(sensor_config), "sweep": _normalised(sweep_config)},
        order="deterministic",
    )
    return hashlib.sha256(canonical).hexdigest()


def _normalised(struct):
    # Decoding coerces ints held in float fields, so 30 and 30.0 digest alike.
    return msgspec.json.decode(msgspec.json.encode(struct), type=type(struct))


def write_curve_csv(curve):
    """
    Serialises a curve as CSV.

    Args:
        curve (CharacterisationCurve): Curve to write.

    Returns:
        bytes: Header plus one row per point, floats in shortest round-trip form.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CURVE_HEADER)
    for frequency, summary in curve.points:
        writer.writerow([
            format_float(frequency),
            format_float(summary.mean_metric),
            format_float(summary.std_metric),
            str(summary.n_frames),
        ])
    return buffer.getvalue().encode("utf-8")


def read_curve_csv(data):
    """
    Parses a curve CSV written by write_curve_csv.

    Args:
        data (bytes): CSV content.

    Returns:
        CharacterisationCurve: Curve with empty per-frame lists and no fingerprint.

    Raises:
        CurveFormatError: malformed-csv or non-monotonic-frequency.
    """
    try:
        rows = list(csv.reader(io.StringIO(data.decode("utf-8"))))
    except (UnicodeDecodeError, csv.Error) as e:
        logger.warning(f"Rejected unreadable curve CSV: {e}")
        raise CurveFormatError(f"Unreadable curve CSV: {e}") from e

    if not rows or rows[0] != CURVE_HEADER:
        logger.warning("Rejected curve CSV with an unexpected header.")
        raise CurveFormatError(f"Curve CSV header must be {','.join(CURVE_HEADER)}")

    points = []
    for line_number, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(CURVE_HEADER):
            raise CurveFormatError(f"Line {line_number}: expected {len(CURVE_HEADER)} fields, got {len(row)}")
        try:
            frequency, mean_metric, std_metric = (float(value) for value in row[:3])
            n_frames = int(row[3])
        except ValueError as e:
            logger.warning(f"Rejected curve CSV line {line_number}: {e}")
            raise CurveFormatError(f"Line {line_number}: {e}") from e
        points.append((frequency, MetricSummary(mean_metric, std_metric, n_frames)))

    if not points:
        raise CurveFormatError("Curve CSV holds no data rows")

    return CharacterisationCurve(points=tuple(points))


def format_range_line(critical_range):
    return ",".join(
        format_float(value)
        for value in (
            critical_range.f_low,
            critical_range.f_high,
            critical_range.peak_frequency,
            critical_range.peak_metric,
        )
    )


def write_ranges_csv(ranges):
    """
    Args:
        ranges (list[CriticalRange]): Detected ranges.

    Returns:
        bytes: `f_low_hz,f_high_hz,peak_hz,peak_metric` header and one line per range.
    """
    lines = [",".join(RANGE_HEADER)] + [format_range_line(r) for r in ranges]
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_json(record):
    """Pretty JSON for any msgspec-encodable record."""
    return msgspec.json.format(msgspec.json.encode(record), indent=2) + b"\n"


def build_manifest(sensor_config, sweep_config, tool_version, timestamp=None):
    """
    Assembles the provenance record of a run.

    Args:
        sensor_config (SensorConfig): Sensor configuration used.
        sweep_config (SweepConfig): Sweep configuration used.
        tool_version (str): Producing package version.
        timestamp (datetime | None): Capture time, now (UTC) when None.

    Returns:
        RunManifest: The manifest.
    """
    moment = timestamp or datetime.now(timezone.utc)
    return RunManifest(
        tool_version=tool_version,
        timestamp=moment.astimezone(timezone.utc).isoformat().replace("+00:00", "Z"),
        sensor=sensor_config,
        sweep=sweep_config,
        run_seed=sweep_config.run_seed,
        config_fingerprint=config_fingerprint(sensor_config, sweep_config),
    )


def write_manifest(manifest):
    return write_json(manifest)


def read_manifest(data):
    return msgspec.json.decode(data, type=RunManifest)


def verify_manifest(manifest):
    """True when the stored fingerprint matches the echoed configurations."""
    return manifest.config_fingerprint == config_fingerprint(manifest.sensor, manifest.sweep)


def render_overlay_svg(curves, labels, ranges=None, log_x=False):
    """
    Draws curves over each other as a self-contained SVG line chart.

    Each curve becomes one line with SVG id `curve-<i>`; each critical range
    a shaded band with id `critical-range-<i>`. The document carries no
    timestamp, so identical input renders identical bytes.

    Args:
        curves (list[CharacterisationCurve]): At least one curve.
        labels (list[str]): One legend label per curve.
        ranges (list[CriticalRange] | None): Bands to shade.
        log_x (bool): Logarithmic frequency axis.

    Returns:
        bytes: SVG 1.1 document.

    Raises:
        RenderError: empty-input or label-mismatch.
    """
    if not curves:
        logger.error("Attempted to render an overlay without curves.")
        raise RenderError("At least one curve is required", kind="empty-input")
    if len(labels) != len(curves):
        logger.error(f"Got {len(labels)} labels for {len(curves)} curves.")
        raise RenderError(
            f"Got {len(labels)} labels for {len(curves)} curves", kind="label-mismatch"
        )

    with matplotlib.rc_context(_SVG_RC):
        figure = Figure(figsize=(9.0, 5.0))
        axes = figure.subplots()

        for index, critical_range in enumerate(ranges or ()):
            axes.axvspan(
                critical_range.f_low,
                critical_range.f_high,
                color="tab:red",
                alpha=0.15,
                linewidth=0,
                gid=f"critical-range-{index}",
            )

        for index, (curve, label) in enumerate(zip(curves, labels)):
            axes.plot(
                curve.frequencies,
                curve.mean_metrics,
                linewidth=1.2,
                label=label,
                gid=f"curve-{index}",
            )

        if log_x:
            axes.set_xscale("log", nonpositive="mask")
        axes.set_xlabel("Injected supply noise frequency (Hz)")
        axes.set_ylabel("Row noise (DN)")
        axes.grid(True, which="both", alpha=0.3)
        axes.legend(loc="upper right")
        figure.tight_layout()

        buffer = io.BytesIO()
        figure.savefig(buffer, format="svg", metadata={"Date": None})

    return buffer.getvalue()
