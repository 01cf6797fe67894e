"""
Simulated rolling-shutter CMOS sensor capturing dark frames under supply ripple.

The ripple reaches the pixel array as one additive offset per row, sampled at
the row's readout start time and scaled by the coupling transfer at the ripple
frequency. Static row/column FPN, Gaussian read noise, rounding and ADC
clipping complete the dark-frame model.
"""
import logging
import math

import numpy as np

from app.characterisation.errors import InvalidConfigError
from app.characterisation.utils.common_utils import round_half_away_from_zero
from app.characterisation.utils.rng_utils import (
    FPN_STREAM,
    PHASE_STREAM,
    READ_STREAM,
    keyed_generator,
)
from app.models import FrameMetadata, RawFrame

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class SimulatedSensor:
    """
    Immutable sensor instance.

    The static FPN tables are drawn once, from the (seed, fpn) stream, and
    frozen. Capturing never mutates the instance, so one sensor can serve
    concurrent captures.

    Attributes:
        config (SensorConfig): Configuration the sensor was built from.
        row_fpn (np.ndarray): Static per-row offsets, DN, length height.
        col_fpn (np.ndarray): Static per-column offsets, DN, length width.
    """

    __slots__ = ("config", "row_fpn", "col_fpn")

    def __init__(self, config):
        rng = keyed_generator(config.seed, FPN_STREAM)
        row_fpn = rng.standard_normal(config.height) * config.row_fpn_sigma
        col_fpn = rng.standard_normal(config.width) * config.col_fpn_sigma
        row_fpn.setflags(write=False)
        col_fpn.setflags(write=False)

        object.__setattr__(self, "config", config)
        object.__setattr__(self, "row_fpn", row_fpn)
        object.__setattr__(self, "col_fpn", col_fpn)

    def __setattr__(self, name, value):
        raise AttributeError("SimulatedSensor is immutable")

    @property
    def row_period(self):
        return self.config.row_period

    @property
    def frame_period(self):
        return self.config.frame_period


def new_sensor(config):
    """
    Builds a sensor instance from a validated configuration.

    Args:
        config (SensorConfig): Sensor configuration; its invariants are checked on construction.

    Returns:
        SimulatedSensor: The immutable sensor.
    """
    sensor = SimulatedSensor(config)
    logger.debug(
        f"Sensor built: {config.width}x{config.height} {config.bit_depth}-bit "
        f"{config.bayer_pattern}, t_row={config.row_period:.6g}s, seed={config.seed}"
    )
    return sensor


def supply_ripple_at(spec, phase, t):
    """
    Evaluates the injected ripple voltage.

    Args:
        spec (SupplyNoiseSpec): Ripple frequency and amplitude.
        phase (float): Phase in radians.
        t (float): Time in seconds, >= 0.

    Returns:
        float: amplitude * sin(2*pi*frequency*t + phase), in volts.
    """
    if spec.is_silent:
        return 0.0
    # Whole cycles are dropped before scaling by 2*pi to keep the argument small.
    cycles = math.fmod(spec.frequency * t, 1.0)
    return spec.amplitude * math.sin(TWO_PI * cycles + phase)


def coupling_gain(transfer, f):
    """
    Interpolates the coupling gain at a frequency.

    Log-gain is linear in log-frequency between knots, so a segment next to a
    zero-gain knot is zero strictly inside it. Outside the knot span the gain
    clamps to the nearest knot, so f = 0 returns the first knot's gain.

    Args:
        transfer (CouplingTransfer): Knot table.
        f (float): Frequency in Hz, >= 0.

    Returns:
        float: Gain in DN per volt.
    """
    frequencies = [knot[0] for knot in transfer.knots]
    gains = [knot[1] for knot in transfer.knots]

    if f <= frequencies[0]:
        return float(gains[0])
    if f >= frequencies[-1]:
        return float(gains[-1])

    upper = int(np.searchsorted(frequencies, f, side="right"))
    f_low, f_high = frequencies[upper - 1], frequencies[upper]
    g_low, g_high = gains[upper - 1], gains[upper]
    if f == f_low:
        return float(g_low)

    if g_low == 0 or g_high == 0:
        # Limit of the geometric rule as a knot gain goes to zero.
        return 0.0

    fraction = math.log(f / f_low) / math.log(f_high / f_low)
    return float(g_low * (g_high / g_low) ** fraction)


def row_offsets(sensor, spec, phase, frame_index):
    """
    Computes the real-valued ripple offset of every row of one frame.

    Row r of frame n starts reading out at t_r = n * t_frame + r * t_row, so
    the offsets are supply_ripple_at sampled on the row grid and scaled by the
    coupling gain.

    Args:
        sensor (SimulatedSensor): Sensor whose timing and coupling apply.
        spec (SupplyNoiseSpec): Injected ripple.
        phase (float): Ripple phase in radians.
        frame_index (int): Frame sequence number.

    Returns:
        np.ndarray: float64 offsets in DN, one per row.
    """
    config = sensor.config
    if spec.is_silent:
        return np.zeros(config.height, dtype=np.float64)

    gain = coupling_gain(config.coupling, spec.frequency)
    # Time is counted in rows; frequencies a multiple of the row rate apart
    # then reduce to the same cycles-per-row fraction.
    cycles_per_row = math.fmod(spec.frequency * config.row_period, 1.0)
    row_numbers = np.arange(config.height, dtype=np.float64) + float(frame_index) * config.rows_per_frame
    cycles = np.mod(cycles_per_row * row_numbers, 1.0)
    return gain * spec.amplitude * np.sin(TWO_PI * cycles + phase)


def frame_phase(sensor, spec, frame_index, stream_key=()):
    """
    Picks the ripple phase of a frame.

    Args:
        sensor (SimulatedSensor): Sensor whose seed keys the phase stream.
        spec (SupplyNoiseSpec): Phase policy and fixed phase.
        frame_index (int): Frame sequence number.
        stream_key (tuple[int, ...]): Extra stream key (run seed, step index).

    Returns:
        float: Phase in radians.
    """
    if spec.phase_policy == "fixed":
        return float(spec.phase)
    rng = keyed_generator(sensor.config.seed, PHASE_STREAM, *stream_key, frame_index)
    return float(rng.uniform(0.0, TWO_PI))


def capture_dark_frame(sensor, spec, frame_index, stream_key=(), role="capture", step_index=None):
    """
    Captures one dark frame.

    pixel(r, c) = clamp(round(black_level + row_fpn[r] + col_fpn[c]
    + read_noise(r, c) + row_offset[r]), 0, 2**bit_depth - 1), rounding half
    away from zero. Read noise and the random phase come from streams keyed
    by the sensor seed, `stream_key` and `frame_index`, so the frame is a pure
    function of the arguments.

    Args:
        sensor (SimulatedSensor): Sensor to capture with.
        spec (SupplyNoiseSpec): Injected ripple.
        frame_index (int): Frame sequence number, >= 0.
        stream_key (tuple[int, ...]): Extra stream key; sweeps pass (run seed, ...).
        role (str): Metadata role recorded on the frame.
        step_index (int | None): Metadata sweep step recorded on the frame.

    Returns:
        RawFrame: The captured frame.
    """
    if frame_index < 0:
        logger.error(f"Attempted to capture a frame with negative index {frame_index}.")
        raise InvalidConfigError(f"frame_index must be >= 0, got {frame_index}")

    config = sensor.config
    phase = frame_phase(sensor, spec, frame_index, stream_key)
    offsets = row_offsets(sensor, spec, phase, frame_index)

    rng = keyed_generator(config.seed, READ_STREAM, *stream_key, frame_index)
    read_noise = rng.standard_normal((config.height, config.width)) * config.read_noise_sigma

    signal = (
        config.black_level
        + (sensor.row_fpn + offsets)[:, np.newaxis]
        + sensor.col_fpn[np.newaxis, :]
        + read_noise
    )
    pixels = np.clip(round_half_away_from_zero(signal), 0, config.max_value).astype(np.uint16)

    return RawFrame(
        pixels=pixels,
        bit_depth=config.bit_depth,
        bayer_pattern=config.bayer_pattern,
        black_level=config.black_level,
        frame_index=frame_index,
        metadata=FrameMetadata(
            seed=config.seed,
            frequency=spec.frequency,
            amplitude=spec.amplitude,
            phase=phase,
            role=role,
            step_index=step_index,
        ),
    )
