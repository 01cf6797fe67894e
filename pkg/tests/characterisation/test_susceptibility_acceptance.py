"""
End-to-end checks of the simulated characterisation against known answers:
injected resonances, the read-noise floor, analytic row noise and run-to-run
repeatability.
"""
import math

import numpy as np
import pytest

from app.characterisation.raw_pipeline import analysis_plane
from app.characterisation.row_noise import row_noise
from app.characterisation.sensor_model import capture_dark_frame, new_sensor
from app.characterisation.sweep import compare_runs, detect_critical_ranges, run_sweep
from app.extensions import StepExecutor
from app.models import CouplingTransfer, SensorConfig, SupplyNoiseSpec, SweepConfig

READ_NOISE = 2.0
# Baseline coupling puts the injected row noise at about half the read-noise floor.
BASELINE_GAIN = 0.126


@pytest.fixture
def executor():
    return StepExecutor(workers=4)


@pytest.fixture
def resonant_sensor():
    """256x256 sensor with tenfold coupling resonances at 15 kHz and 75 kHz."""
    g0 = BASELINE_GAIN
    knots = (
        (1000.0, g0),
        (12000.0, g0),
        (15000.0, 10 * g0),
        (18000.0, g0),
        (72000.0, g0),
        (75000.0, 10 * g0),
        (78000.0, g0),
    )
    return new_sensor(
        SensorConfig(
            width=256,
            height=256,
            frame_rate=30.0,
            v_blank_rows=20,
            read_noise_sigma=READ_NOISE,
            coupling=CouplingTransfer(knots=knots),
            seed=2024,
        )
    )


@pytest.fixture
def broadband_sensor():
    """256x256 sensor coupling strongly from 50 Hz to 300 kHz."""
    return new_sensor(
        SensorConfig(
            width=256,
            height=256,
            read_noise_sigma=READ_NOISE,
            coupling=CouplingTransfer(knots=((50.0, 2.0), (20000.0, 8.0), (300000.0, 1.0))),
            seed=77,
        )
    )


def test_injected_resonances_are_detected(resonant_sensor, executor):
    """A 0-100 kHz sweep finds exactly the two resonances, each around its centre."""
    config = SweepConfig(f_start=0.0, f_stop=100_000.0, f_step=1000.0, amplitude=1.0, run_seed=1)

    curve = run_sweep(resonant_sensor, config, executor=executor)
    ranges = detect_critical_ranges(curve, k=6.0)

    assert len(curve.points) == 101
    assert len(ranges) == 2
    low, high = ranges
    assert low.f_low <= 15000.0 <= low.f_high
    assert 13000.0 <= low.peak_frequency <= 17000.0
    assert high.f_low <= 75000.0 <= high.f_high
    assert 73000.0 <= high.peak_frequency <= 77000.0
    assert low.f_low >= 12000.0 and low.f_high <= 18000.0
    assert high.f_low >= 72000.0 and high.f_high <= 78000.0


def test_zero_amplitude_control_sweep_finds_nothing(resonant_sensor, executor):
    """The same 0-100 kHz sweep without injection detects no range."""
    config = SweepConfig(f_start=0.0, f_stop=100_000.0, f_step=1000.0, amplitude=0.0, run_seed=1)

    curve = run_sweep(resonant_sensor, config, executor=executor)

    assert len(curve.points) == 101
    assert detect_critical_ranges(curve, k=6.0) == []


def test_zero_injection_floor_matches_read_noise(resonant_sensor):
    """Without injection the G1 metric sits at about sigma / sqrt(G1 width)."""
    config = SweepConfig(
        f_start=1000.0, f_stop=1000.0, f_step=1000.0, amplitude=0.0, frames_per_step=64, run_seed=5
    )

    floor = run_sweep(resonant_sensor, config).mean_metrics[0]

    ideal = READ_NOISE / math.sqrt(128)
    # Quantisation and the reference's own noise lift the floor by a few percent.
    assert 1.0 * ideal <= floor <= 1.08 * ideal


def test_row_noise_matches_sinusoid_rms():
    """Strong injection below the plane's Nyquist measures about gain * amplitude / sqrt(2)."""
    config = SensorConfig(
        width=64,
        height=512,
        bit_depth=12,
        black_level=2048,
        coupling=CouplingTransfer(knots=((1000.0, 200.0),)),
        seed=8,
    )
    sensor = new_sensor(config)
    expected = 200.0 / math.sqrt(2.0)

    for i in range(10):
        cycles_over_plane = 10.37 + 11.0 * i
        frequency = cycles_over_plane / (512 * config.row_period)
        spec = SupplyNoiseSpec(frequency=frequency, amplitude=1.0, phase_policy="fixed", phase=0.3)

        metric = row_noise(analysis_plane(capture_dark_frame(sensor, spec, 0), "G1"))

        assert metric == pytest.approx(expected, rel=0.02)


@pytest.mark.parametrize("seed", [0, 1])
def test_row_rate_aliases_measure_alike(seed):
    """Frequencies one row rate apart measure the same metric."""
    config = SensorConfig(width=32, height=64, coupling=CouplingTransfer(knots=((1000.0, 50.0),)), seed=seed)
    sensor = new_sensor(config)
    row_rate = 1.0 / config.row_period
    rng = np.random.default_rng(seed)

    for frequency in rng.uniform(10.0, 20_000.0, size=10):
        low = SupplyNoiseSpec(frequency=float(frequency), amplitude=1.0, phase_policy="fixed", phase=0.7)
        high = SupplyNoiseSpec(frequency=float(frequency + row_rate), amplitude=1.0, phase_policy="fixed", phase=0.7)

        low_metric = row_noise(analysis_plane(capture_dark_frame(sensor, low, 0), "G1"))
        high_metric = row_noise(analysis_plane(capture_dark_frame(sensor, high, 0), "G1"))

        assert high_metric == pytest.approx(low_metric, rel=1e-3, abs=1e-3)


def test_row_rate_aliases_capture_identical_frames():
    """With flat coupling and fixed phase, f and f + 1 / t_row capture bitwise-identical frames."""
    config = SensorConfig(width=64, height=64, coupling=CouplingTransfer(knots=((1000.0, 30.0),)), seed=31)
    sensor = new_sensor(config)
    row_rate = 1.0 / config.row_period
    rng = np.random.default_rng(5)

    for frequency in rng.uniform(10.0, 100_000.0, size=20):
        low = SupplyNoiseSpec(frequency=float(frequency), amplitude=1.0, phase_policy="fixed", phase=0.9)
        high = SupplyNoiseSpec(frequency=float(frequency + row_rate), amplitude=1.0, phase_policy="fixed", phase=0.9)

        for frame_index in (0, 7):
            assert capture_dark_frame(sensor, low, frame_index).same_pixels(
                capture_dark_frame(sensor, high, frame_index)
            )


def test_repeated_sweeps_agree(broadband_sensor, executor):
    """Three log sweeps with distinct run seeds agree within 10% wherever the signal is well above the floor."""
    floor_config = SweepConfig(
        f_start=1000.0, f_stop=1000.0, f_step=1000.0, amplitude=0.0, frames_per_step=16, run_seed=100
    )
    floor = run_sweep(broadband_sensor, floor_config).mean_metrics[0]

    curves = [
        run_sweep(
            broadband_sensor,
            SweepConfig(
                f_start=50.0,
                f_stop=300_000.0,
                points_per_decade=20,
                amplitude=1.0,
                frames_per_step=16,
                run_seed=seed,
            ),
            executor=executor,
        )
        for seed in (11, 12, 13)
    ]

    report = compare_runs(curves)
    metrics = np.mean([curve.mean_metrics for curve in curves], axis=0)
    deviations = np.array([deviation for _, deviation in report.per_frequency_deviation])

    assert report.n_runs == 3
    assert len(report.per_frequency_deviation) == 77
    significant = metrics > 2.0 * floor
    assert significant.sum() > 40
    assert np.all(deviations[significant] < 0.10)
