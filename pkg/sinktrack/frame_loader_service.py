"""
Reading and writing frame sequences as CSV (frame,object_id,x,y).
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from .entities import FrameSequence, PointSet
from .errors import InvalidInputError

LOGGER = logging.getLogger(__name__)

FRAME_COLUMNS = ["frame", "object_id", "x", "y"]
FRAME_DTYPES = {"frame": "int64", "object_id": "int64", "x": "float64", "y": "float64"}


def frames_to_frame(frames: FrameSequence) -> pd.DataFrame:
    """Flatten a FrameSequence into the long CSV layout, sorted by frame then object_id."""
    n = frames.n_objects
    return pd.DataFrame(
        {
            "frame": np.repeat([frame.frame_index for frame in frames.frames], n),
            "object_id": np.tile(np.arange(n), len(frames)),
            "x": np.concatenate([frame.positions[:, 0] for frame in frames.frames]),
            "y": np.concatenate([frame.positions[:, 1] for frame in frames.frames]),
        },
        columns=FRAME_COLUMNS,
    )


def dump_frames(frames: FrameSequence, path: Union[str, Path]) -> Path:
    """
    Write a FrameSequence to CSV.

    Args:
        frames: The sequence to export.
        path: Destination file; parent directories are created.

    Returns:
        The path written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frames_to_frame(frames).to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    LOGGER.debug(f"Wrote {len(frames)} frames of {frames.n_objects} objects to [{path}]")
    return path


def load_frames(path: Union[str, Path]) -> FrameSequence:
    """
    Load a FrameSequence from CSV.

    The header must be exactly frame,object_id,x,y; rows must be sorted by frame
    then object_id, object ids 0-based and contiguous in every frame.

    Raises:
        InvalidInputError: If the file does not follow the frame CSV layout.
        OSError: If the file cannot be read.
    """
    path = Path(path)
    LOGGER.info("Loading frames from CSV file [%s]...", path)
    try:
        table = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
        raise InvalidInputError(f"[{path}] is not a frame CSV: {exc}") from exc

    if list(table.columns) != FRAME_COLUMNS:
        raise InvalidInputError(
            f"[{path}] header must be {','.join(FRAME_COLUMNS)}, got {','.join(map(str, table.columns))}"
        )
    if table.empty:
        raise InvalidInputError(f"[{path}] contains no rows")
    try:
        table = table.astype(FRAME_DTYPES)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"[{path}] has a non-numeric entry: {exc}") from exc

    ordered = table.sort_values(["frame", "object_id"], kind="stable").reset_index(drop=True)
    if not ordered.equals(table):
        raise InvalidInputError(f"[{path}] rows must be sorted by frame then object_id")

    coordinates = {}
    for frame_index, group in table.groupby("frame", sort=True):
        if not np.array_equal(group["object_id"].to_numpy(), np.arange(len(group))):
            raise InvalidInputError(f"[{path}] frame {frame_index} object ids must be 0..n-1")
        coordinates[int(frame_index)] = group[["x", "y"]].to_numpy(dtype=float)

    try:
        sequence = FrameSequence(frames=[PointSet(positions=xy, frame_index=index) for index, xy in coordinates.items()])
    except InvalidInputError as exc:
        raise InvalidInputError(f"[{path}] {exc}") from exc
    LOGGER.info(f"Loaded {len(sequence)} frames of {sequence.n_objects} objects.")
    return sequence
