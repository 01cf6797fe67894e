import logging
from pathlib import Path

import msgspec

from app.characterisation.utils.common_utils import reject_config
from app.models import RunConfigFile, SweepConfig

logger = logging.getLogger(__name__)


def load_run_config(path):
    """
    Decodes a TOML run configuration.

    Unknown keys and violated invariants are rejected by the config structs.

    Args:
        path (Path): TOML file with [sensor] and [sweep] tables.

    Returns:
        RunConfigFile: The validated configuration.

    Raises:
        OSError: If the file cannot be read.
        msgspec.ValidationError: If a value is missing, mistyped or invalid.
        msgspec.DecodeError: If the file is not valid TOML.
    """
    data = Path(path).read_bytes()
    run_config = msgspec.toml.decode(data, type=RunConfigFile)
    logger.info(f"Loaded run configuration {path}")
    return run_config


def with_run_seed(sweep_config, run_seed):
    """Copy of a sweep configuration with another run seed, revalidated."""
    fields = msgspec.structs.asdict(sweep_config)
    fields["run_seed"] = run_seed
    return SweepConfig(**fields)


def resolve_output_dir(out_dir, run_config):
    if out_dir is not None:
        return Path(out_dir)
    if run_config.output_dir:
        return Path(run_config.output_dir)
    reject_config("no output directory: pass --out or set output_dir in the run configuration")
