import logging
import re

import msgspec
import numpy as np
from scipy.ndimage import convolve

from app.characterisation.errors import DimensionMismatchError, FrameFormatError, InvalidConfigError
from app.models import FrameMetadata, FrameSidecar, Plane, RawFrame, RgbImage

logger = logging.getLogger(__name__)

# (row, column) of each channel inside the 2x2 tile. G1 is the green site on
# the tile's first row.
BAYER_SITES = {
    "RGGB": {"R": (0, 0), "G1": (0, 1), "G2": (1, 0), "B": (1, 1)},
    "BGGR": {"B": (0, 0), "G1": (0, 1), "G2": (1, 0), "R": (1, 1)},
    "GRBG": {"G1": (0, 0), "R": (0, 1), "B": (1, 0), "G2": (1, 1)},
    "GBRG": {"G1": (0, 0), "B": (0, 1), "R": (1, 0), "G2": (1, 1)},
}

_CROSS = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
_HORIZONTAL = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
_VERTICAL = _HORIZONTAL.T
_DIAGONAL = np.array([[1.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 1.0]])

_PGM_HEADER = re.compile(rb"\A(P5)(?:\s+|#[^\n]*\n)+(\d+)(?:\s+|#[^\n]*\n)+(\d+)(?:\s+|#[^\n]*\n)+(\d+)\s")


def _require_even(frame):
    if frame.width % 2 or frame.height % 2:
        logger.error(f"Bayer frame has odd dimensions {frame.width}x{frame.height}.")
        raise DimensionMismatchError(
            f"Bayer frames need even dimensions, got {frame.width}x{frame.height}"
        )


def subtract_black_level(frame, black_level, floor=True):
    """
    Removes the black level, flooring at zero by default.

    Args:
        frame (RawFrame | Plane): Raw frame or already extracted plane.
        black_level (float): Offset to remove, DN.
        floor (bool): Clamp negative results to zero.

    Returns:
        Plane: max(value - black_level, 0) as real numbers, or the signed
        difference when `floor` is False.
    """
    values = frame.pixels if isinstance(frame, RawFrame) else frame.values
    corrected = values.astype(np.float64) - black_level
    if floor:
        corrected = np.maximum(corrected, 0.0)
    return Plane(corrected)


def channel_mask(pattern, channel, shape):
    row, col = BAYER_SITES[pattern][channel]
    mask = np.zeros(shape, dtype=np.float64)
    mask[row::2, col::2] = 1.0
    return mask


def extract_channel_plane(frame, channel):
    """
    Extracts the subsampled plane of one Bayer site.

    Args:
        frame (RawFrame): Frame with even dimensions.
        channel (str): 'R', 'G1', 'G2' or 'B'.

    Returns:
        Plane: (height/2, width/2) plane of that site's samples.
    """
    _require_even(frame)
    row, col = BAYER_SITES[frame.bayer_pattern][channel]
    return Plane(frame.pixels[row::2, col::2].astype(np.float64))


def _interpolate(samples, mask, kernel):
    # Normalised convolution: each missing sample becomes the mean of the
    # same-colour neighbours the kernel reaches. Borders replicate.
    numerator = convolve(samples, kernel, mode="nearest")
    denominator = convolve(mask, kernel, mode="nearest")
    return np.divide(numerator, denominator, out=np.zeros_like(numerator), where=denominator > 0)


def _fill_red_or_blue(raw, mask, green_mask, same_row_mask):
    """
    Fills a chroma plane: horizontal neighbours at green sites sharing its row,
    vertical neighbours at the other green sites, diagonal neighbours at the
    opposite chroma sites.
    """
    samples = raw * mask
    plane = samples.copy()

    horizontal = _interpolate(samples, mask, _HORIZONTAL)
    vertical = _interpolate(samples, mask, _VERTICAL)
    diagonal = _interpolate(samples, mask, _DIAGONAL)

    at_green = green_mask.astype(bool)
    in_row = same_row_mask.astype(bool)
    plane[at_green & in_row] = horizontal[at_green & in_row]
    plane[at_green & ~in_row] = vertical[at_green & ~in_row]

    at_opposite = ~(at_green | mask.astype(bool))
    plane[at_opposite] = diagonal[at_opposite]
    return plane


def demosaic_bilinear(frame):
    """
    Bilinear demosaic of a Bayer frame to three full-resolution planes.

    Missing green comes from the four cross neighbours; missing red/blue from
    the two horizontal or vertical neighbours at green sites and the four
    diagonal neighbours at opposite-colour sites. Out-of-frame neighbours use
    clamped coordinates. Results are not re-quantised.

    Args:
        frame (RawFrame): Frame with even dimensions.

    Returns:
        RgbImage: Interpolated R, G and B planes.
    """
    _require_even(frame)
    raw = frame.pixels.astype(np.float64)
    shape = raw.shape
    pattern = frame.bayer_pattern

    red_mask = channel_mask(pattern, "R", shape)
    blue_mask = channel_mask(pattern, "B", shape)
    green_mask = channel_mask(pattern, "G1", shape) + channel_mask(pattern, "G2", shape)

    green_samples = raw * green_mask
    green = green_samples + (1.0 - green_mask) * _interpolate(green_samples, green_mask, _CROSS)

    red_row = BAYER_SITES[pattern]["R"][0]
    rows = np.arange(shape[0])[:, np.newaxis]
    in_red_rows = np.broadcast_to((rows % 2 == red_row).astype(np.float64), shape)
    in_blue_rows = 1.0 - in_red_rows

    red = _fill_red_or_blue(raw, red_mask, green_mask, in_red_rows)
    blue = _fill_red_or_blue(raw, blue_mask, green_mask, in_blue_rows)

    return RgbImage(red=Plane(red), green=Plane(green), blue=Plane(blue))


def luma(rgb):
    """
    Computes (R + 2G + B) / 4 per pixel.

    Args:
        rgb (RgbImage): Demosaiced image.

    Returns:
        Plane: Luma plane.
    """
    return Plane((rgb.red.values + 2.0 * rgb.green.values + rgb.blue.values) / 4.0)


def analysis_plane(frame, plane_kind):
    """
    Builds the plane the row-noise metric runs on.

    'G1' takes the raw G1 sites; 'LUMA' demosaics and takes luma. Both
    subtract the frame's black level without flooring, so dark-frame noise
    below the black level is kept.

    Args:
        frame (RawFrame): Captured or ingested frame.
        plane_kind (str): 'G1' or 'LUMA'.

    Returns:
        Plane: Black-level corrected analysis plane.
    """
    if plane_kind == "G1":
        plane = extract_channel_plane(frame, "G1")
    elif plane_kind == "LUMA":
        plane = luma(demosaic_bilinear(frame))
    else:
        raise InvalidConfigError(f"Unknown analysis plane {plane_kind!r}")
    return subtract_black_level(plane, frame.black_level, floor=False)


def write_raw_frame(frame):
    """
    Serialises a frame as a 16-bit binary PGM and a JSON sidecar.

    Args:
        frame (RawFrame): Frame to serialise.

    Returns:
        tuple[bytes, bytes]: (PGM bytes, sidecar bytes).
    """
    header = f"P5\n{frame.width} {frame.height}\n65535\n".encode("ascii")
    body = frame.pixels.astype(">u2").tobytes()

    metadata = frame.metadata
    sidecar = FrameSidecar(
        bit_depth=frame.bit_depth,
        bayer_pattern=frame.bayer_pattern,
        black_level=frame.black_level,
        frame_index=frame.frame_index,
        frequency_hz=metadata.frequency,
        amplitude_v=metadata.amplitude,
        phase_rad=metadata.phase,
        seed=metadata.seed,
        role=metadata.role,
        step_index=metadata.step_index,
    )
    return header + body, msgspec.json.format(msgspec.json.encode(sidecar), indent=2)


def read_raw_frame(pgm_bytes, sidecar_bytes):
    """
    Parses a 16-bit binary PGM plus its sidecar.

    Args:
        pgm_bytes (bytes): 'P5' image with maxval 65535, big-endian samples.
        sidecar_bytes (bytes | None): JSON sidecar.

    Returns:
        RawFrame: The frame.

    Raises:
        FrameFormatError: malformed-header, dimension-mismatch,
            value-exceeds-bit-depth or missing-sidecar.
    """
    if sidecar_bytes is None:
        logger.error("Frame sidecar is missing.")
        raise FrameFormatError("Frame sidecar metadata is missing", kind="missing-sidecar")

    match = _PGM_HEADER.match(pgm_bytes)
    if not match:
        logger.warning("Rejected frame with an unparseable PGM header.")
        raise FrameFormatError("Not a binary PGM (P5) header", kind="malformed-header")

    width, height, maxval = (int(match.group(i)) for i in (2, 3, 4))
    if maxval != 65535:
        logger.warning(f"Rejected PGM with maxval {maxval}.")
        raise FrameFormatError(
            f"Only 16-bit PGM (maxval 65535) is accepted, got maxval {maxval}", kind="malformed-header"
        )
    if width < 1 or height < 1:
        raise FrameFormatError(f"Invalid PGM dimensions {width}x{height}", kind="malformed-header")

    body = pgm_bytes[match.end():]
    expected = width * height * 2
    if len(body) != expected:
        logger.warning(f"PGM body holds {len(body)} bytes, header implies {expected}.")
        raise FrameFormatError(
            f"PGM body holds {len(body)} bytes, expected {expected} for {width}x{height}",
            kind="dimension-mismatch",
        )

    try:
        sidecar = msgspec.json.decode(sidecar_bytes, type=FrameSidecar)
    except msgspec.DecodeError as e:
        logger.warning(f"Rejected frame sidecar: {e}")
        raise FrameFormatError(f"Malformed frame sidecar: {e}", kind="malformed-header") from e

    pixels = np.frombuffer(body, dtype=">u2").reshape(height, width).astype(np.uint16)

    return RawFrame(
        pixels=pixels,
        bit_depth=sidecar.bit_depth,
        bayer_pattern=sidecar.bayer_pattern,
        black_level=sidecar.black_level,
        frame_index=sidecar.frame_index,
        metadata=FrameMetadata(
            seed=sidecar.seed,
            frequency=sidecar.frequency_hz,
            amplitude=sidecar.amplitude_v,
            phase=sidecar.phase_rad,
            role=sidecar.role,
            step_index=sidecar.step_index,
        ),
    )
