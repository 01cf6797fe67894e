import logging
from pathlib import Path

from app.characterisation.errors import FrameFormatError
from app.characterisation.raw_pipeline import read_raw_frame, write_raw_frame

logger = logging.getLogger(__name__)

FRAME_SUFFIX = ".pgm"
SIDECAR_SUFFIX = ".json"


def frame_stem(frame):
    """File stem of a frame, unique within one sweep dump."""
    metadata = frame.metadata
    if metadata.role == "reference":
        return f"reference_{frame.frame_index:04d}"
    if metadata.role == "step" and metadata.step_index is not None:
        return f"step{metadata.step_index:05d}_{frame.frame_index:04d}"
    return f"frame_{frame.frame_index:06d}"


def sidecar_path(pgm_path):
    return Path(pgm_path).with_suffix(SIDECAR_SUFFIX)


def save_frame(directory, frame):
    """
    Writes `<stem>.pgm` and its `<stem>.json` sidecar.

    Args:
        directory (Path): Target directory, created if missing.
        frame (RawFrame): Frame to write.

    Returns:
        Path: Path of the PGM file.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pgm_bytes, sidecar_bytes = write_raw_frame(frame)

    pgm_path = directory / f"{frame_stem(frame)}{FRAME_SUFFIX}"
    pgm_path.write_bytes(pgm_bytes)
    sidecar_path(pgm_path).write_bytes(sidecar_bytes)
    return pgm_path


def load_frame(pgm_path):
    """
    Reads a PGM frame and its sidecar.

    Args:
        pgm_path (Path): Path of the `.pgm` file.

    Returns:
        RawFrame: The frame.

    Raises:
        FrameFormatError: missing-sidecar when no `.json` sits next to the frame.
    """
    pgm_path = Path(pgm_path)
    metadata_path = sidecar_path(pgm_path)
    if not metadata_path.is_file():
        logger.warning(f"Frame {pgm_path.name} has no sidecar.")
        raise FrameFormatError(f"Missing sidecar for {pgm_path.name}", kind="missing-sidecar")

    return read_raw_frame(pgm_path.read_bytes(), metadata_path.read_bytes())


def list_frame_files(directory):
    return sorted(Path(directory).glob(f"*{FRAME_SUFFIX}"))


class FrameDumper:
    """
    Frame sink that saves every burst it receives into one directory.

    Attributes:
        directory (Path): Dump directory.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def __call__(self, frames):
        for frame in frames:
            save_frame(self.directory, frame)
