import math
from dataclasses import dataclass, field
from typing import Literal

import msgspec
import numpy as np

from app.characterisation.errors import (
    CurveFormatError,
    DegeneratePlaneError,
    DimensionMismatchError,
    FrameFormatError,
)
from app.characterisation.utils.common_utils import (
    reject_config,
    require_finite,
    require_non_negative,
    require_positive,
    require_seed,
)

BayerPattern = Literal["RGGB", "BGGR", "GRBG", "GBRG"]
BayerChannel = Literal["R", "G1", "G2", "B"]
AnalysisPlane = Literal["G1", "LUMA"]
PhasePolicy = Literal["fixed", "per_frame_random"]
FrameRole = Literal["reference", "step", "capture"]


class CouplingTransfer(msgspec.Struct, frozen=True, forbid_unknown_fields=True):
    """
    Frequency-dependent gain from supply ripple to row offset.

    Attributes:
        knots (tuple[tuple[float, float], ...]): (frequency Hz, gain DN per volt)
            pairs with strictly increasing frequencies and non-negative gains.
    """

    knots: tuple[tuple[float, float], ...] = ((1000.0, 1.0),)

    def __post_init__(self):
        if not self.knots:
            reject_config("coupling.knots must contain at least one knot")

        previous = None
        for frequency, gain in self.knots:
            require_positive("coupling.knots frequency", frequency)
            require_non_negative("coupling.knots gain", gain)
            if previous is not None and frequency <= previous:
                reject_config(
                    f"coupling.knots frequencies must be strictly increasing "
                    f"({frequency!r} follows {previous!r})"
                )
            previous = frequency


class SensorConfig(msgspec.Struct, frozen=True, forbid_unknown_fields=True, kw_only=True):
    """
    Geometry, timing and noise parameters of a simulated sensor.

    Attributes:
        width (int): Columns, even and >= 2.
        height (int): Rows, even and >= 2.
        bit_depth (int): ADC bits, 8..16.
        black_level (int): Dark offset in DN, 0 <= black_level < 2**bit_depth.
        bayer_pattern (str): One of RGGB, BGGR, GRBG, GBRG.
        frame_rate (float): Frames per second.
        v_blank_rows (int): Rows of vertical blanking per frame.
        read_noise_sigma (float): Temporal Gaussian read noise, DN.
        row_fpn_sigma (float): Spread of the static per-row offsets, DN.
        col_fpn_sigma (float): Spread of the static per-column offsets, DN.
        coupling (CouplingTransfer): Supply-to-row coupling transfer.
        seed (int): Unsigned 64-bit seed of every stream the sensor draws from.
    """

    width: int = 1280
    height: int = 800
    bit_depth: int = 10
    black_level: int = 64
    bayer_pattern: BayerPattern = "RGGB"
    frame_rate: float = 30.0
    v_blank_rows: int = 20
    read_noise_sigma: float = 2.0
    row_fpn_sigma: float = 0.5
    col_fpn_sigma: float = 0.5
    coupling: CouplingTransfer = msgspec.field(default_factory=CouplingTransfer)
    seed: int = 0

    def __post_init__(self):
        for name in ("width", "height"):
            value = getattr(self, name)
            if value < 2 or value % 2:
                reject_config(f"sensor.{name} must be even and >= 2, got {value}")

        if not 8 <= self.bit_depth <= 16:
            reject_config(f"sensor.bit_depth must be within 8..16, got {self.bit_depth}")

        if not 0 <= self.black_level < 2 ** self.bit_depth:
            reject_config(
                f"sensor.black_level must be within [0, {2 ** self.bit_depth}), got {self.black_level}"
            )

        require_positive("sensor.frame_rate", self.frame_rate)
        if self.v_blank_rows < 0:
            reject_config(f"sensor.v_blank_rows must be >= 0, got {self.v_blank_rows}")

        for name in ("read_noise_sigma", "row_fpn_sigma", "col_fpn_sigma"):
            require_non_negative(f"sensor.{name}", getattr(self, name))

        require_seed("sensor.seed", self.seed)

        if not math.isfinite(self.row_period) or self.row_period <= 0:
            reject_config("sensor row period 1 / (frame_rate * (height + v_blank_rows)) is not finite")

    @property
    def rows_per_frame(self):
        return self.height + self.v_blank_rows

    @property
    def row_period(self):
        """Row readout period t_row in seconds."""
        return 1.0 / (self.frame_rate * self.rows_per_frame)

    @property
    def frame_period(self):
        return self.rows_per_frame * self.row_period

    @property
    def max_value(self):
        return 2 ** self.bit_depth - 1


class SupplyNoiseSpec(msgspec.Struct, frozen=True, forbid_unknown_fields=True, kw_only=True):
    """
    Sinusoidal ripple injected on the sensor supply.

    Attributes:
        frequency (float): Hz, >= 0.
        amplitude (float): Volts, >= 0.
        phase_policy (str): 'fixed' uses `phase`; 'per_frame_random' draws one per frame.
        phase (float): Radians, used only with the fixed policy.
    """

    frequency: float = 0.0
    amplitude: float = 0.0
    phase_policy: PhasePolicy = "per_frame_random"
    phase: float = 0.0

    def __post_init__(self):
        require_non_negative("noise.frequency", self.frequency)
        require_non_negative("noise.amplitude", self.amplitude)
        require_finite("noise.phase", self.phase)

    @property
    def is_silent(self):
        return self.frequency == 0 or self.amplitude == 0


class SweepConfig(msgspec.Struct, frozen=True, forbid_unknown_fields=True, kw_only=True):
    """
    Frequency sweep settings.

    Exactly one of `f_step` (linear schedule) and `points_per_decade`
    (logarithmic schedule) is set.

    Attributes:
        f_start (float): First frequency, Hz.
        f_stop (float): Last frequency, Hz.
        f_step (float | None): Linear step, Hz.
        points_per_decade (int | None): Logarithmic density.
        amplitude (float): Injected ripple amplitude, volts.
        frames_per_step (int): Burst size per frequency.
        analysis_plane (str): 'G1' raw green sites or 'LUMA' demosaiced luma.
        run_seed (int): Unsigned 64-bit seed of this run's capture streams.
        reference_frames (int): Zero-injection frames for the row reference, 0 disables it.
        phase_policy (str): Phase policy of every injected step.
        phase (float): Radians, used only with the fixed policy.
    """

    f_start: float
    f_stop: float
    f_step: float | None = None
    points_per_decade: int | None = None
    amplitude: float = 1.0
    frames_per_step: int = 8
    analysis_plane: AnalysisPlane = "G1"
    run_seed: int = 0
    reference_frames: int = 16
    phase_policy: PhasePolicy = "per_frame_random"
    phase: float = 0.0

    def __post_init__(self):
        require_non_negative("sweep.f_start", self.f_start)
        require_non_negative("sweep.f_stop", self.f_stop)
        if self.f_start > self.f_stop:
            reject_config(f"sweep.f_start ({self.f_start}) must not exceed sweep.f_stop ({self.f_stop})")

        if (self.f_step is None) == (self.points_per_decade is None):
            reject_config("exactly one of sweep.f_step and sweep.points_per_decade must be set")

        if self.f_step is not None:
            require_positive("sweep.f_step", self.f_step)
        else:
            if self.points_per_decade <= 0:
                reject_config(f"sweep.points_per_decade must be > 0, got {self.points_per_decade}")
            if self.f_start <= 0:
                reject_config("sweep.f_start must be > 0 for a logarithmic schedule")

        require_non_negative("sweep.amplitude", self.amplitude)
        if self.frames_per_step < 1:
            reject_config(f"sweep.frames_per_step must be >= 1, got {self.frames_per_step}")
        if self.reference_frames < 0:
            reject_config(f"sweep.reference_frames must be >= 0, got {self.reference_frames}")
        require_seed("sweep.run_seed", self.run_seed)
        require_finite("sweep.phase", self.phase)

    @property
    def is_logarithmic(self):
        return self.points_per_decade is not None


class RunConfigFile(msgspec.Struct, frozen=True, forbid_unknown_fields=True, kw_only=True):
    """
    Top-level TOML run configuration.

    Attributes:
        sensor (SensorConfig): [sensor] table.
        sweep (SweepConfig): [sweep] table.
        output_dir (str | None): Default output directory, overridden by --out.
    """

    sweep: SweepConfig
    sensor: SensorConfig = msgspec.field(default_factory=SensorConfig)
    output_dir: str | None = None


class RunManifest(msgspec.Struct, frozen=True, forbid_unknown_fields=True, kw_only=True):
    """
    Provenance record written next to every curve.

    Attributes:
        tool_version (str): Package version that produced the run.
        timestamp (str): UTC, RFC 3339.
        sensor (SensorConfig): Echo of the sensor configuration.
        sweep (SweepConfig): Echo of the sweep configuration.
        run_seed (int): Seed the sweep actually used.
        config_fingerprint (str): SHA-256 hex over the canonical configs.
    """

    tool_version: str
    timestamp: str
    sensor: SensorConfig
    sweep: SweepConfig
    run_seed: int
    config_fingerprint: str


class FrameMetadata(msgspec.Struct, frozen=True, kw_only=True):
    """
    Injection conditions a frame was captured under.

    Attributes:
        seed (int | None): Sensor seed.
        frequency (float | None): Injected frequency, Hz. None for unknown captures.
        amplitude (float | None): Injected amplitude, volts.
        phase (float | None): Ripple phase used, radians.
        role (str): 'reference', 'step' or 'capture'.
        step_index (int | None): Sweep step the frame belongs to.
    """

    seed: int | None = None
    frequency: float | None = None
    amplitude: float | None = None
    phase: float | None = None
    role: FrameRole = "capture"
    step_index: int | None = None


class FrameSidecar(msgspec.Struct, frozen=True, kw_only=True, omit_defaults=True):
    """JSON record stored next to every PGM frame."""

    bit_depth: int
    bayer_pattern: BayerPattern
    black_level: int
    frame_index: int
    frequency_hz: float | None = None
    amplitude_v: float | None = None
    phase_rad: float | None = None
    seed: int | None = None
    role: FrameRole = "capture"
    step_index: int | None = None


@dataclass(frozen=True, eq=False)
class RawFrame:
    """
    A single Bayer-mosaic dark frame.

    Attributes:
        pixels (np.ndarray): (height, width) unsigned integer DN values.
        bit_depth (int): ADC bits; every pixel is within [0, 2**bit_depth - 1].
        bayer_pattern (str): Colour filter layout.
        black_level (int): Dark offset the frame was captured with, DN.
        frame_index (int): Sequence number within its burst.
        metadata (FrameMetadata): Injection conditions.
    """

    pixels: np.ndarray
    bit_depth: int
    bayer_pattern: BayerPattern
    black_level: int = 0
    frame_index: int = 0
    metadata: FrameMetadata = field(default_factory=FrameMetadata)

    def __post_init__(self):
        if self.pixels.ndim != 2 or self.pixels.size == 0:
            raise FrameFormatError(
                f"Frame pixels must be a non-empty 2-D grid, got shape {self.pixels.shape}",
                kind="dimension-mismatch",
            )
        limit = 2 ** self.bit_depth - 1
        if self.pixels.min() < 0 or self.pixels.max() > limit:
            raise FrameFormatError(
                f"Frame value {int(self.pixels.max())} exceeds {self.bit_depth}-bit range (max {limit})",
                kind="value-exceeds-bit-depth",
            )

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    def same_pixels(self, other):
        return self.pixels.shape == other.pixels.shape and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True, eq=False)
class Plane:
    """
    A real-valued (height, width) grid of DN values.

    Attributes:
        values (np.ndarray): float64 samples, all finite.
    """

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.size == 0:
            raise DegeneratePlaneError(f"Plane must be a non-empty 2-D grid, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise DegeneratePlaneError("Plane values must be finite")

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True, eq=False)
class RgbImage:
    """Three equally sized colour planes."""

    red: Plane
    green: Plane
    blue: Plane

    def __post_init__(self):
        if not self.red.shape == self.green.shape == self.blue.shape:
            raise DimensionMismatchError(
                f"RGB planes differ in size: {self.red.shape}, {self.green.shape}, {self.blue.shape}"
            )

    @property
    def width(self):
        return self.red.width

    @property
    def height(self):
        return self.red.height


@dataclass(frozen=True, eq=False)
class RowReference:
    """Per-row means of zero-injection frames, used to cancel static row FPN."""

    reference_row_means: np.ndarray


class MetricSummary(msgspec.Struct, frozen=True):
    """
    Row-noise metric of one burst.

    `per_frame` is empty for summaries read back from a curve CSV, which
    stores only the aggregate columns.

    Attributes:
        mean_metric (float): Arithmetic mean of the per-frame metric, DN.
        std_metric (float): Population standard deviation of the per-frame metric, DN.
        n_frames (int): Burst size.
        per_frame (tuple[float, ...]): Metric of each frame in capture order.
    """

    mean_metric: float
    std_metric: float
    n_frames: int
    per_frame: tuple[float, ...] = ()

    @classmethod
    def from_per_frame(cls, per_frame):
        values = np.asarray(per_frame, dtype=np.float64)
        # Offsets from the first frame: a burst of equal values summarises exactly.
        offsets = values - values[0]
        return cls(
            mean_metric=float(values[0] + np.mean(offsets)),
            std_metric=float(np.std(offsets)),
            n_frames=int(values.size),
            per_frame=tuple(float(v) for v in values),
        )


class CharacterisationCurve(msgspec.Struct, frozen=True):
    """
    Susceptibility curve produced by one sweep run.

    Attributes:
        points (tuple[tuple[float, MetricSummary], ...]): (frequency Hz, summary)
            pairs ordered by strictly increasing frequency.
        config_fingerprint (str): Fingerprint of the configs that produced it, '' if unknown.
        run_seed (int | None): Seed of the run, None if unknown.
    """

    points: tuple[tuple[float, MetricSummary], ...]
    config_fingerprint: str = ""
    run_seed: int | None = None

    def __post_init__(self):
        if not self.points:
            raise CurveFormatError("A curve needs at least one point", kind="malformed-csv")
        frequencies = [frequency for frequency, _ in self.points]
        for previous, current in zip(frequencies, frequencies[1:]):
            if not current > previous:
                raise CurveFormatError(
                    f"Curve frequencies must strictly increase ({current!r} follows {previous!r})",
                    kind="non-monotonic-frequency",
                )

    @property
    def frequencies(self):
        return np.array([frequency for frequency, _ in self.points], dtype=np.float64)

    @property
    def mean_metrics(self):
        return np.array([summary.mean_metric for _, summary in self.points], dtype=np.float64)


class CriticalRange(msgspec.Struct, frozen=True):
    """
    Contiguous frequency interval where the metric exceeds the threshold.

    Attributes:
        f_low (float): First frequency of the range, Hz.
        f_high (float): Last frequency of the range, Hz.
        peak_frequency (float): Frequency of the largest metric in the range, Hz.
        peak_metric (float): Largest metric in the range, DN.
        threshold (float): Threshold the range was detected against, DN.
    """

    f_low: float
    f_high: float
    peak_frequency: float
    peak_metric: float
    threshold: float


class RepeatabilityReport(msgspec.Struct, frozen=True):
    """
    Agreement between repeated sweeps over one schedule.

    Attributes:
        n_runs (int): Number of curves compared, >= 2.
        max_relative_deviation (float): Largest per-frequency deviation.
        per_frequency_deviation (tuple[tuple[float, float], ...]): (frequency Hz, deviation).
    """

    n_runs: int
    max_relative_deviation: float
    per_frequency_deviation: tuple[tuple[float, float], ...]


class SusceptibilitySummary(msgspec.Struct, frozen=True):
    """Peak impact and critical ranges of one curve."""

    peak_frequency: float
    peak_metric: float
    floor_metric: float
    k: float
    ranges: tuple[CriticalRange, ...]
