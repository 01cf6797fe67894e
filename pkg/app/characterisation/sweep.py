"""
Characterisation sweep: reference capture, stepped injection, burst
measurement, plus repeatability and critical-range analysis of the
resulting curves.
"""
import logging
import math

import numpy as np

from app.characterisation.errors import ScheduleMismatchError, TooFewPointsError
from app.characterisation.raw_pipeline import analysis_plane
from app.characterisation.report_io import config_fingerprint
from app.characterisation.row_noise import capture_reference, row_noise_burst
from app.characterisation.sensor_model import capture_dark_frame
from app.models import (
    CharacterisationCurve,
    CriticalRange,
    RepeatabilityReport,
    SupplyNoiseSpec,
    SusceptibilitySummary,
)

logger = logging.getLogger(__name__)

REFERENCE_STREAM = 0
STEP_STREAM = 1

MAD_SCALE = 1.4826
DEFAULT_K = 6.0
DEVIATION_EPSILON = 1e-9

# Relative slack when deciding that a computed point lands on f_stop.
_ENDPOINT_TOLERANCE = 1e-9


def frequency_schedule(config):
    """
    Lists the injection frequencies of a sweep.

    Linear schedules run f_start, f_start + f_step, ... up to f_stop, which
    is included only when it lands on a step. Logarithmic schedules space
    points_per_decade points geometrically from f_start and always end on
    f_stop.

    Args:
        config (SweepConfig): Validated sweep configuration.

    Returns:
        list[float]: Strictly increasing frequencies in Hz.
    """
    start, stop = config.f_start, config.f_stop
    if start == stop:
        return [float(start)]

    def lands_on_stop(value):
        return abs(value - stop) <= _ENDPOINT_TOLERANCE * max(1.0, abs(stop))

    if config.is_logarithmic:
        decades = math.log10(stop / start)
        count = int(math.floor(config.points_per_decade * decades + _ENDPOINT_TOLERANCE))
        schedule = [start * 10.0 ** (i / config.points_per_decade) for i in range(count + 1)]
        schedule[0] = float(start)
        if count > 0 and lands_on_stop(schedule[-1]):
            schedule[-1] = float(stop)
        else:
            schedule.append(float(stop))
        return schedule

    count = int(math.floor((stop - start) / config.f_step + _ENDPOINT_TOLERANCE))
    schedule = [start + i * config.f_step for i in range(count + 1)]
    if count > 0 and lands_on_stop(schedule[-1]):
        schedule[-1] = float(stop)
    return [float(f) for f in schedule]


def _capture_burst(sensor, spec, count, stream_key, role, step_index=None):
    return [
        capture_dark_frame(sensor, spec, frame_index, stream_key=stream_key, role=role, step_index=step_index)
        for frame_index in range(count)
    ]


def run_sweep(sensor, config, executor=None, reverse=False, frame_sink=None):
    """
    Runs one characterisation sweep.

    A zero-injection reference burst is captured first and turned into a
    RowReference. Each scheduled frequency then gets a burst of
    frames_per_step frames measured on the configured plane against that
    reference. Capture streams are keyed by (run_seed, step_index,
    frame_index), so the curve does not depend on the order or concurrency
    in which steps execute.

    Args:
        sensor (SimulatedSensor): Sensor under test.
        config (SweepConfig): Sweep configuration.
        executor (Executor | None): Anything with a `map(fn, iterable)`; steps run sequentially when None.
        reverse (bool): Submit steps last-to-first.
        frame_sink (Callable[[list[RawFrame]], None] | None): Receives every captured burst, reference included.

    Returns:
        CharacterisationCurve: One point per scheduled frequency.
    """
    schedule = frequency_schedule(config)
    logger.info(
        f"Sweep started: {len(schedule)} steps {schedule[0]:g}-{schedule[-1]:g} Hz, "
        f"{config.frames_per_step} frames/step, plane {config.analysis_plane}, run_seed {config.run_seed}"
    )

    reference = None
    if config.reference_frames > 0:
        silent = SupplyNoiseSpec(phase_policy=config.phase_policy, phase=config.phase)
        frames = _capture_burst(
            sensor, silent, config.reference_frames, (config.run_seed, REFERENCE_STREAM), "reference"
        )
        if frame_sink is not None:
            frame_sink(frames)
        reference = capture_reference([analysis_plane(frame, config.analysis_plane) for frame in frames])

    def measure(step_index):
        spec = SupplyNoiseSpec(
            frequency=schedule[step_index],
            amplitude=config.amplitude,
            phase_policy=config.phase_policy,
            phase=config.phase,
        )
        frames = _capture_burst(
            sensor,
            spec,
            config.frames_per_step,
            (config.run_seed, STEP_STREAM, step_index),
            "step",
            step_index,
        )
        if frame_sink is not None:
            frame_sink(frames)
        summary = row_noise_burst([analysis_plane(frame, config.analysis_plane) for frame in frames], reference)
        logger.debug(f"Step {step_index}: {spec.frequency:g} Hz -> {summary.mean_metric:.6g} DN")
        return step_index, summary

    order = range(len(schedule) - 1, -1, -1) if reverse else range(len(schedule))
    mapper = executor.map if executor is not None else map
    summaries = dict(mapper(measure, order))

    curve = CharacterisationCurve(
        points=tuple((schedule[i], summaries[i]) for i in range(len(schedule))),
        config_fingerprint=config_fingerprint(sensor.config, config),
        run_seed=config.run_seed,
    )
    logger.info(f"Sweep finished: run_seed {config.run_seed}, fingerprint {curve.config_fingerprint[:12]}")
    return curve


def _runs_above(flags):
    runs = []
    start = None
    for index, flag in enumerate(flags):
        if flag and start is None:
            start = index
        elif not flag and start is not None:
            runs.append([start, index - 1])
            start = None
    if start is not None:
        runs.append([start, len(flags) - 1])
    return runs


def susceptibility_threshold(metrics, k=DEFAULT_K):
    """median + k * 1.4826 * MAD of the metrics."""
    median = float(np.median(metrics))
    mad = MAD_SCALE * float(np.median(np.abs(metrics - median)))
    return median + k * mad


def detect_critical_ranges(curve, k=DEFAULT_K):
    """
    Finds frequency ranges where the curve rises above a robust threshold.

    The threshold is median + k * MAD (MAD scaled by 1.4826) of the mean
    metrics. Consecutive points strictly above it form a range; two ranges
    separated by a single sub-threshold point are merged.

    Args:
        curve (CharacterisationCurve): Curve with at least three points.
        k (float): Threshold multiplier.

    Returns:
        list[CriticalRange]: Ranges ordered by f_low.

    Raises:
        TooFewPointsError: If the curve has fewer than three points.
    """
    if len(curve.points) < 3:
        logger.error(f"Critical-range detection needs 3 points, curve has {len(curve.points)}.")
        raise TooFewPointsError(f"Critical-range detection needs at least 3 points, got {len(curve.points)}")

    frequencies = curve.frequencies
    metrics = curve.mean_metrics
    threshold = susceptibility_threshold(metrics, k)

    merged = []
    for run in _runs_above(metrics > threshold):
        if merged and run[0] - merged[-1][1] == 2:
            merged[-1][1] = run[1]
        else:
            merged.append(run)

    ranges = []
    for first, last in merged:
        peak = first + int(np.argmax(metrics[first:last + 1]))
        ranges.append(
            CriticalRange(
                f_low=float(frequencies[first]),
                f_high=float(frequencies[last]),
                peak_frequency=float(frequencies[peak]),
                peak_metric=float(metrics[peak]),
                threshold=threshold,
            )
        )

    logger.info(f"Detected {len(ranges)} critical range(s) above {threshold:.6g} DN (k={k:g}).")
    return ranges


def summarize_susceptibility(curve, ranges, k=DEFAULT_K):
    """
    Summarises the peak impact of a curve.

    Args:
        curve (CharacterisationCurve): Measured curve.
        ranges (list[CriticalRange]): Ranges detected on it.
        k (float): Multiplier the ranges were detected with.

    Returns:
        SusceptibilitySummary: Global peak, median floor and the ranges.
    """
    metrics = curve.mean_metrics
    peak = int(np.argmax(metrics))
    return SusceptibilitySummary(
        peak_frequency=float(curve.frequencies[peak]),
        peak_metric=float(metrics[peak]),
        floor_metric=float(np.median(metrics)),
        k=float(k),
        ranges=tuple(ranges),
    )


def compare_runs(curves):
    """
    Quantifies how well repeated sweeps agree.

    Per frequency the deviation is (max - min) / max(mean of the runs'
    means, 1e-9 DN).

    Args:
        curves (list[CharacterisationCurve]): At least two curves over one schedule.

    Returns:
        RepeatabilityReport: Per-frequency and worst-case deviation.

    Raises:
        ScheduleMismatchError: If fewer than two curves are given or their schedules differ.
    """
    if len(curves) < 2:
        logger.error(f"Repeatability needs at least two runs, got {len(curves)}.")
        raise ScheduleMismatchError(f"Repeatability needs at least two curves, got {len(curves)}")

    frequencies = curves[0].frequencies
    for index, curve in enumerate(curves[1:], start=1):
        if not np.array_equal(curve.frequencies, frequencies):
            logger.error(f"Run {index} was swept over a different schedule.")
            raise ScheduleMismatchError(f"Curve {index} does not share the first curve's frequency schedule")

    metrics = np.stack([curve.mean_metrics for curve in curves])
    spread = metrics.max(axis=0) - metrics.min(axis=0)
    deviations = spread / np.maximum(metrics.mean(axis=0), DEVIATION_EPSILON)

    return RepeatabilityReport(
        n_runs=len(curves),
        max_relative_deviation=float(deviations.max()),
        per_frequency_deviation=tuple(
            (float(f), float(d)) for f, d in zip(frequencies, deviations)
        ),
    )
