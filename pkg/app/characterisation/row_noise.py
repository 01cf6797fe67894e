"""
Row-noise metric.

The metric of a plane is the population standard deviation of its row means,
optionally after removing a per-row reference captured without injection. A
burst is measured frame by frame and the per-frame values are summarised;
frames are never averaged before measurement.
"""
import logging

import numpy as np

from app.characterisation.errors import DegeneratePlaneError, DimensionMismatchError
from app.models import MetricSummary, RowReference

logger = logging.getLogger(__name__)


def _require_same_shape(planes):
    if not planes:
        logger.error("Received an empty burst.")
        raise DegeneratePlaneError("At least one frame is required")

    shape = planes[0].shape
    for index, plane in enumerate(planes[1:], start=1):
        if plane.shape != shape:
            logger.error(f"Frame {index} is {plane.shape}, burst started with {shape}.")
            raise DimensionMismatchError(
                f"All frames must share one size: frame {index} is {plane.shape}, expected {shape}"
            )
    return shape


def row_means(plane):
    """
    Args:
        plane (Plane): Input plane, height >= 1.

    Returns:
        np.ndarray: Arithmetic mean of each row, DN.
    """
    return plane.values.mean(axis=1)


def row_noise(plane, reference=None):
    """
    Measures row-correlated noise in one plane.

    Args:
        plane (Plane): Plane with height >= 2.
        reference (RowReference | None): Per-row reference subtracted from the row means.

    Returns:
        float: sqrt((1/H) * sum((m_r - mean(m))**2)) over the corrected row means m_r.

    Raises:
        DegeneratePlaneError: If the plane has fewer than two rows.
        DimensionMismatchError: If the reference length differs from the plane height.
    """
    if plane.height < 2:
        logger.error(f"Row noise needs at least two rows, plane has {plane.height}.")
        raise DegeneratePlaneError(f"Row noise needs height >= 2, got {plane.height}")

    means = row_means(plane)
    if reference is not None:
        if reference.reference_row_means.shape != means.shape:
            logger.error(
                f"Reference covers {reference.reference_row_means.size} rows, plane has {plane.height}."
            )
            raise DimensionMismatchError(
                f"Reference has {reference.reference_row_means.size} rows, plane has {plane.height}"
            )
        means = means - reference.reference_row_means

    # Centring on the first row keeps equal row means at exactly zero spread.
    return float(np.std(means - means[0]))


def capture_reference(planes):
    """
    Averages the row means of zero-injection planes into a row reference.

    Args:
        planes (list[Plane]): At least one plane, all the same size.

    Returns:
        RowReference: Mean over planes of each row's mean.
    """
    _require_same_shape(planes)
    stacked = np.stack([row_means(plane) for plane in planes])
    reference = stacked.mean(axis=0)
    reference.setflags(write=False)
    return RowReference(reference_row_means=reference)


def row_noise_burst(planes, reference=None):
    """
    Measures every plane of a burst and summarises the per-frame metrics.

    Args:
        planes (list[Plane]): At least one plane, all the same size.
        reference (RowReference | None): Optional static-FPN reference.

    Returns:
        MetricSummary: Mean, population std and per-frame values.
    """
    _require_same_shape(planes)
    return MetricSummary.from_per_frame([row_noise(plane, reference) for plane in planes])


def vertical_banding_spectrum(plane):
    """
    Magnitude spectrum of the mean-subtracted row-means sequence.

    Index k of the result is banding at k cycles per frame height.

    Args:
        plane (Plane): Plane with height >= 4.

    Returns:
        tuple[np.ndarray, np.ndarray]: (cycles per frame, magnitude) for k = 0 .. H // 2.
    """
    if plane.height < 4:
        logger.error(f"Banding spectrum needs at least four rows, plane has {plane.height}.")
        raise DegeneratePlaneError(f"Banding spectrum needs height >= 4, got {plane.height}")

    centred = row_means(plane)
    centred = centred - centred[0]
    magnitudes = np.abs(np.fft.rfft(centred - centred.mean()))
    cycles = np.arange(magnitudes.size)
    return cycles, magnitudes
