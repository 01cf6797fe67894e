import logging
import math

import numpy as np

from app.characterisation.errors import InvalidConfigError

logger = logging.getLogger(__name__)

U64_MAX = 2 ** 64 - 1


def reject_config(message):
    """
    Logs and raises an invalid-config error.

    Args:
        message (str): Diagnostic naming the offending field.

    Raises:
        InvalidConfigError: Always.
    """
    logger.error(f"Invalid configuration: {message}")
    raise InvalidConfigError(message)


def require_finite(name, value):
    if not math.isfinite(value):
        reject_config(f"{name} must be finite, got {value!r}")


def require_non_negative(name, value):
    require_finite(name, value)
    if value < 0:
        reject_config(f"{name} must be >= 0, got {value!r}")


def require_positive(name, value):
    require_finite(name, value)
    if value <= 0:
        reject_config(f"{name} must be > 0, got {value!r}")


def require_seed(name, value):
    if not 0 <= value <= U64_MAX:
        reject_config(f"{name} must be an unsigned 64-bit integer, got {value!r}")


def round_half_away_from_zero(values):
    """
    Rounds an array to the nearest integer, ties away from zero.

    numpy's own rounding is half-to-even, which would make golden frames
    depend on the tie rule.

    Args:
        values (np.ndarray): Real-valued input.

    Returns:
        np.ndarray: Rounded values, still floating point.
    """
    return np.copysign(np.floor(np.abs(values) + 0.5), values)


def format_float(value):
    """Shortest text that parses back to exactly the same float."""
    return repr(float(value))
