import math

import pytest

from app.characterisation.errors import InvalidConfigError, ScheduleMismatchError, TooFewPointsError
from app.characterisation.report_io import config_fingerprint
from app.characterisation.sensor_model import new_sensor
from app.characterisation.sweep import (
    compare_runs,
    detect_critical_ranges,
    frequency_schedule,
    run_sweep,
    summarize_susceptibility,
    susceptibility_threshold,
)
from app.extensions import StepExecutor
from app.models import CharacterisationCurve, CouplingTransfer, MetricSummary, SensorConfig, SweepConfig


def _curve(metrics, step=1000.0, run_seed=None):
    return CharacterisationCurve(
        points=tuple((i * step, MetricSummary(float(m), 0.0, 1)) for i, m in enumerate(metrics)),
        run_seed=run_seed,
    )


@pytest.fixture
def sensor():
    return new_sensor(
        SensorConfig(
            width=32,
            height=32,
            coupling=CouplingTransfer(knots=((100.0, 2.0), (5000.0, 20.0))),
            seed=3,
        )
    )


@pytest.fixture
def sweep_config():
    """Four-step linear sweep with short bursts."""
    return SweepConfig(
        f_start=500.0,
        f_stop=3500.0,
        f_step=1000.0,
        frames_per_step=3,
        reference_frames=2,
        run_seed=21,
    )


@pytest.fixture
def baseline():
    """Twenty points alternating slightly around 1 DN."""
    return [1.0, 1.01, 1.02] * 6 + [1.0, 1.01]


def test_linear_schedule_includes_landing_stop():
    """A linear sweep from 0 to 100 kHz in 1 kHz steps has 101 points."""
    schedule = frequency_schedule(SweepConfig(f_start=0.0, f_stop=100_000.0, f_step=1000.0))

    assert len(schedule) == 101
    assert schedule[0] == 0.0
    assert schedule[-1] == 100_000.0


def test_linear_schedule_stops_before_overshoot():
    """f_stop is left out when the last step would overshoot it."""
    assert frequency_schedule(SweepConfig(f_start=0.0, f_stop=10.0, f_step=3.0)) == [0.0, 3.0, 6.0, 9.0]


def test_single_point_schedule():
    """f_start == f_stop sweeps one frequency."""
    assert frequency_schedule(SweepConfig(f_start=250.0, f_stop=250.0, f_step=10.0)) == [250.0]


def test_schedule_keeps_start_when_stop_is_within_tolerance():
    """A stop a hair above the start never replaces the start."""
    linear = frequency_schedule(SweepConfig(f_start=1000.0, f_stop=1000.0000001, f_step=1.0))
    logarithmic = frequency_schedule(SweepConfig(f_start=1000.0, f_stop=1000.0000001, points_per_decade=20))

    assert linear == [1000.0]
    assert logarithmic == [1000.0, 1000.0000001]


def test_logarithmic_schedule():
    """Log schedules space points geometrically and end on f_stop."""
    schedule = frequency_schedule(SweepConfig(f_start=50.0, f_stop=300_000.0, points_per_decade=20))

    assert len(schedule) == 77
    assert schedule[0] == 50.0
    assert schedule[-1] == 300_000.0
    assert all(b > a for a, b in zip(schedule, schedule[1:]))
    assert schedule[20] == pytest.approx(500.0)

    decades = frequency_schedule(SweepConfig(f_start=10.0, f_stop=1000.0, points_per_decade=2))
    assert decades == pytest.approx([10.0, 10.0 ** 1.5, 100.0, 10.0 ** 2.5, 1000.0])
    assert decades[-1] == 1000.0


@pytest.mark.parametrize(
    "fields, message",
    [
        ({"f_start": 5000.0, "f_stop": 100.0, "f_step": 10.0}, "f_start"),
        ({"f_start": 0.0, "f_stop": 100.0}, "exactly one"),
        ({"f_start": 0.0, "f_stop": 100.0, "f_step": 10.0, "points_per_decade": 5}, "exactly one"),
        ({"f_start": 0.0, "f_stop": 100.0, "points_per_decade": 5}, "logarithmic"),
        ({"f_start": 0.0, "f_stop": 100.0, "f_step": 0.0}, "f_step"),
        ({"f_start": 0.0, "f_stop": 100.0, "f_step": 10.0, "frames_per_step": 0}, "frames_per_step"),
        ({"f_start": 0.0, "f_stop": 100.0, "f_step": 10.0, "run_seed": 2 ** 64}, "run_seed"),
    ],
)
def test_invalid_sweep_config(fields, message):
    """Sweep invariants are enforced on construction."""
    with pytest.raises(InvalidConfigError, match=message):
        SweepConfig(**fields)


def test_run_sweep_produces_one_point_per_step(sensor, sweep_config):
    """The curve follows the schedule and carries the run's seed and fingerprint."""
    curve = run_sweep(sensor, sweep_config)

    assert curve.frequencies.tolist() == [500.0, 1500.0, 2500.0, 3500.0]
    assert all(summary.n_frames == 3 for _, summary in curve.points)
    assert all(len(summary.per_frame) == 3 for _, summary in curve.points)
    assert curve.run_seed == 21
    assert curve.config_fingerprint == config_fingerprint(sensor.config, sweep_config)


def test_run_sweep_is_order_and_concurrency_independent(sensor, sweep_config):
    """Sequential, reversed and threaded sweeps give identical curves."""
    sequential = run_sweep(sensor, sweep_config)
    reversed_order = run_sweep(sensor, sweep_config, reverse=True)
    threaded = run_sweep(sensor, sweep_config, executor=StepExecutor(workers=3))

    assert sequential == reversed_order
    assert sequential == threaded


def test_run_seed_changes_the_curve(sensor, sweep_config):
    """Another run seed captures other frames."""
    other = SweepConfig(
        f_start=500.0, f_stop=3500.0, f_step=1000.0, frames_per_step=3, reference_frames=2, run_seed=22
    )

    assert run_sweep(sensor, sweep_config).mean_metrics.tolist() != run_sweep(sensor, other).mean_metrics.tolist()


def test_frame_sink_receives_every_burst(sensor, sweep_config):
    """The sink sees the reference burst and every step burst."""
    bursts = []

    run_sweep(sensor, sweep_config, frame_sink=bursts.append)

    frames = [frame for burst in bursts for frame in burst]
    references = [frame for frame in frames if frame.metadata.role == "reference"]
    steps = [frame for frame in frames if frame.metadata.role == "step"]
    assert len(references) == 2
    assert len(steps) == 12
    assert {frame.metadata.step_index for frame in steps} == {0, 1, 2, 3}
    assert {frame.metadata.frequency for frame in steps} == {500.0, 1500.0, 2500.0, 3500.0}


def test_sweep_without_reference():
    """reference_frames = 0 measures raw row noise, static FPN included."""
    sensor = new_sensor(SensorConfig(width=32, height=32, row_fpn_sigma=5.0))
    config = SweepConfig(f_start=0.0, f_stop=0.0, f_step=1.0, frames_per_step=2, reference_frames=0)
    with_reference = SweepConfig(f_start=0.0, f_stop=0.0, f_step=1.0, frames_per_step=2, reference_frames=4)

    raw = run_sweep(sensor, config).mean_metrics[0]
    corrected = run_sweep(sensor, with_reference).mean_metrics[0]

    assert raw > 2.0
    assert corrected < 1.0


def test_gain_bump_lifts_only_its_band():
    """A 40-60 kHz coupling bump measures g(f) * A / sqrt(2) inside the band and stays low outside."""
    config = SensorConfig(
        width=16,
        height=256,
        bit_depth=12,
        black_level=1024,
        frame_rate=5000.0,
        v_blank_rows=0,
        read_noise_sigma=0.0,
        row_fpn_sigma=0.0,
        col_fpn_sigma=0.0,
        coupling=CouplingTransfer(knots=((39000.0, 0.1), (40000.0, 20.0), (60000.0, 20.0), (61000.0, 0.1))),
        seed=4,
    )
    # 5 kHz steps put a whole number of ripple periods on the 128-row G1 plane.
    sweep = SweepConfig(
        f_start=0.0,
        f_stop=100_000.0,
        f_step=5000.0,
        amplitude=10.0,
        frames_per_step=1,
        reference_frames=1,
        phase_policy="fixed",
        phase=0.3,
    )

    curve = run_sweep(new_sensor(config), sweep)

    for frequency, metric in zip(curve.frequencies, curve.mean_metrics):
        if 40_000.0 <= frequency <= 60_000.0:
            assert metric == pytest.approx(20.0 * 10.0 / math.sqrt(2.0), rel=0.02)
        else:
            assert metric < 2.0


def test_detect_single_range(baseline):
    """Adjacent points above the threshold form one range around the peak."""
    metrics = list(baseline)
    metrics[5], metrics[6] = 5.0, 7.0

    ranges = detect_critical_ranges(_curve(metrics))

    assert len(ranges) == 1
    assert ranges[0].f_low == 5000.0
    assert ranges[0].f_high == 6000.0
    assert ranges[0].peak_frequency == 6000.0
    assert ranges[0].peak_metric == 7.0
    assert ranges[0].threshold == susceptibility_threshold(_curve(metrics).mean_metrics)


def test_single_point_gap_is_merged(baseline):
    """Ranges separated by one sub-threshold point merge."""
    metrics = list(baseline)
    metrics[3], metrics[4], metrics[6] = 4.0, 6.0, 5.0

    ranges = detect_critical_ranges(_curve(metrics))

    assert [(r.f_low, r.f_high, r.peak_frequency) for r in ranges] == [(3000.0, 6000.0, 4000.0)]


def test_two_point_gap_keeps_ranges_apart(baseline):
    """Ranges separated by two sub-threshold points stay separate."""
    metrics = list(baseline)
    metrics[3], metrics[6], metrics[15] = 4.0, 5.0, 9.0

    ranges = detect_critical_ranges(_curve(metrics))

    assert [(r.f_low, r.f_high) for r in ranges] == [(3000.0, 3000.0), (6000.0, 6000.0), (15000.0, 15000.0)]


def test_flat_curve_has_no_ranges():
    """A flat curve never exceeds its own median."""
    assert detect_critical_ranges(_curve([2.0] * 10)) == []


def test_detection_needs_three_points():
    """Two points are too few for a robust threshold."""
    with pytest.raises(TooFewPointsError):
        detect_critical_ranges(_curve([1.0, 5.0]))


def test_larger_k_detects_less(baseline):
    """Raising k raises the threshold."""
    metrics = list(baseline)
    metrics[10] = 1.2

    assert len(detect_critical_ranges(_curve(metrics), k=3.0)) == 1
    assert detect_critical_ranges(_curve(metrics), k=20.0) == []


def test_detection_ignores_constant_offset(baseline):
    """Lifting the whole curve by a constant finds the same ranges."""
    metrics = list(baseline)
    metrics[3], metrics[4], metrics[12] = 4.0, 6.0, 8.0

    ranges = detect_critical_ranges(_curve(metrics))
    lifted = detect_critical_ranges(_curve([m + 100.0 for m in metrics]))

    assert len(ranges) == 2
    assert [(r.f_low, r.f_high, r.peak_frequency) for r in lifted] == [
        (r.f_low, r.f_high, r.peak_frequency) for r in ranges
    ]
    assert [r.peak_metric for r in lifted] == pytest.approx([r.peak_metric + 100.0 for r in ranges])


def test_summarize_susceptibility(baseline):
    """The summary reports the global peak and the median floor."""
    metrics = list(baseline)
    metrics[8] = 9.0
    curve = _curve(metrics)
    ranges = detect_critical_ranges(curve)

    summary = summarize_susceptibility(curve, ranges)

    assert summary.peak_frequency == 8000.0
    assert summary.peak_metric == 9.0
    assert summary.floor_metric == 1.01
    assert summary.k == 6.0
    assert summary.ranges == tuple(ranges)


def test_compare_identical_runs():
    """Identical runs deviate by zero everywhere."""
    report = compare_runs([_curve([1.0, 2.0, 3.0]), _curve([1.0, 2.0, 3.0]), _curve([1.0, 2.0, 3.0])])

    assert report.n_runs == 3
    assert report.max_relative_deviation == 0.0
    assert [f for f, _ in report.per_frequency_deviation] == [0.0, 1000.0, 2000.0]


def test_compare_runs_relative_to_mean():
    """Deviation is (max - min) over the mean of the runs."""
    report = compare_runs([_curve([10.0, 4.0]), _curve([9.0, 4.0])])

    assert report.per_frequency_deviation[0][1] == pytest.approx(1.0 / 9.5)
    assert report.per_frequency_deviation[1][1] == 0.0
    assert report.max_relative_deviation == pytest.approx(1.0 / 9.5)


def test_compare_runs_guards_zero_mean():
    """Zero metrics do not divide by zero."""
    report = compare_runs([_curve([0.0, 0.0]), _curve([0.0, 0.0])])

    assert report.max_relative_deviation == 0.0


def test_compare_runs_rejects_mismatched_schedules():
    """Runs must share one schedule and there must be at least two."""
    with pytest.raises(ScheduleMismatchError):
        compare_runs([_curve([1.0, 2.0]), _curve([1.0, 2.0], step=500.0)])

    with pytest.raises(ScheduleMismatchError):
        compare_runs([_curve([1.0, 2.0]), _curve([1.0, 2.0, 3.0])])

    with pytest.raises(ScheduleMismatchError):
        compare_runs([_curve([1.0, 2.0])])
