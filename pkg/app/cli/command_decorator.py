import logging
from functools import wraps

import click
import msgspec

from app.characterisation.errors import CharacterisationError, CurveFormatError, FrameFormatError

logger = logging.getLogger(__name__)

EXIT_VALIDATION = 1
EXIT_IO = 2


def _fail(exit_code, error):
    logger.error(f"Command failed ({type(error).__name__}): {error}")
    click.echo(f"error: {error}", err=True)
    raise click.exceptions.Exit(exit_code)


def handle_command_errors(func):
    """
    Decorator turning toolkit errors into diagnostics and exit codes.

    Exit code 1 is a validation error (bad configuration or unusable data),
    2 an I/O error (unreadable or malformed files).

    Args:
        func (Callable): Click command callback.

    Returns:
        Callable: The wrapped callback.
    """

    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except msgspec.ValidationError as e:
            _fail(EXIT_VALIDATION, e)
        except (OSError, FrameFormatError, CurveFormatError, msgspec.DecodeError) as e:
            _fail(EXIT_IO, e)
        except CharacterisationError as e:
            _fail(EXIT_VALIDATION, e)

    return wrapper
