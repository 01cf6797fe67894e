import logging
from collections import defaultdict

from app.characterisation.errors import CharacterisationError, DimensionMismatchError, FrameFormatError
from app.characterisation.raw_pipeline import analysis_plane
from app.characterisation.row_noise import capture_reference, row_noise_burst
from app.characterisation.utils.frame_utils import list_frame_files, load_frame, sidecar_path
from app.models import CharacterisationCurve

logger = logging.getLogger(__name__)


def load_corpus(directory):
    """
    Loads every `.pgm` frame of a directory together with its sidecar.

    All frames without a sidecar are reported at once.

    Args:
        directory (Path): Frame directory.

    Returns:
        list[RawFrame]: Frames in file-name order.

    Raises:
        CharacterisationError: no-frames when the directory holds no `.pgm` file.
        FrameFormatError: missing-sidecar, or any frame format failure.
        DimensionMismatchError: inconsistent-dimensions when frames differ in size.
    """
    paths = list_frame_files(directory)
    if not paths:
        logger.error(f"No frames found in {directory}.")
        raise CharacterisationError(f"no frames found in {directory}", kind="no-frames")

    orphans = [path.name for path in paths if not sidecar_path(path).is_file()]
    if orphans:
        logger.error(f"{len(orphans)} frame(s) without sidecar in {directory}.")
        raise FrameFormatError(f"missing sidecar for: {', '.join(orphans)}", kind="missing-sidecar")

    frames = [load_frame(path) for path in paths]

    shapes = {frame.pixels.shape for frame in frames}
    if len(shapes) > 1:
        listed = ", ".join(f"{w}x{h}" for h, w in sorted(shapes))
        raise DimensionMismatchError(f"frames have inconsistent dimensions: {listed}", kind="inconsistent-dimensions")

    logger.info(f"Loaded {len(frames)} frame(s) from {directory}.")
    return frames


def _burst_order(frame):
    step_index = frame.metadata.step_index
    return (step_index if step_index is not None else -1, frame.frame_index)


def curve_from_corpus(frames, plane_kind="G1"):
    """
    Recomputes a characterisation curve from captured frames.

    Frames with role 'reference' build the row reference. All other frames
    are grouped by their exact injected frequency; each group is one burst.

    Args:
        frames (list[RawFrame]): Frames loaded from a corpus.
        plane_kind (str): 'G1' or 'LUMA'.

    Returns:
        CharacterisationCurve: One point per distinct frequency, ascending.

    Raises:
        CharacterisationError: missing-frequency when a non-reference frame records no frequency.
    """
    references = sorted(
        (frame for frame in frames if frame.metadata.role == "reference"), key=_burst_order
    )
    captures = [frame for frame in frames if frame.metadata.role != "reference"]

    unlabelled = [frame for frame in captures if frame.metadata.frequency is None]
    if unlabelled:
        indices = ", ".join(str(frame.frame_index) for frame in unlabelled)
        logger.error(f"{len(unlabelled)} frame(s) record no injection frequency.")
        raise CharacterisationError(
            f"frames without frequency_hz (frame_index {indices})", kind="missing-frequency"
        )
    if not captures:
        raise CharacterisationError("corpus holds only reference frames", kind="no-frames")

    reference = None
    if references:
        reference = capture_reference([analysis_plane(frame, plane_kind) for frame in references])

    bursts = defaultdict(list)
    for frame in captures:
        bursts[frame.metadata.frequency].append(frame)

    points = []
    for frequency in sorted(bursts):
        burst = sorted(bursts[frequency], key=_burst_order)
        summary = row_noise_burst([analysis_plane(frame, plane_kind) for frame in burst], reference)
        points.append((float(frequency), summary))

    logger.info(f"Analysed {len(captures)} frame(s) over {len(points)} frequencies on plane {plane_kind}.")
    return CharacterisationCurve(points=tuple(points))
