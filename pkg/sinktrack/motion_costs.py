"""
Speed cost matrices and acceleration cost tensors built from consecutive frames.

Frame intervals are taken as 1, so first differences are speeds and second
differences are accelerations.
"""

import numpy as np
from scipy.spatial.distance import cdist

from .entities import PointSet
from .errors import DimensionMismatchError


def _require_equal_counts(*frames: PointSet):
    counts = {len(frame) for frame in frames}
    if len(counts) != 1:
        raise DimensionMismatchError(
            "frames must hold the same number of objects, got "
            + ", ".join(f"{len(frame)} (frame {frame.frame_index})" for frame in frames)
        )


def speed_cost(a: PointSet, b: PointSet) -> np.ndarray:
    """
    Distance matrix m_ij = ||b_j - a_i|| between frame t and frame t+1.

    Raises:
        DimensionMismatchError: If the frames hold different numbers of objects.
    """
    _require_equal_counts(a, b)
    return cdist(a.positions, b.positions, metric="euclidean")


def acceleration_cost(a: PointSet, b: PointSet, c: PointSet) -> np.ndarray:
    """
    Cost tensor m_ijk = ||(c_k - b_j) - (b_j - a_i)|| = ||c_k - 2 b_j + a_i||.

    Raises:
        DimensionMismatchError: If the frames hold different numbers of objects.
    """
    _require_equal_counts(a, b, c)
    # per-axis second differences keep the temporaries at d^3 instead of 2 d^3
    dx, dy = (
        a.positions[:, None, None, axis] - 2.0 * b.positions[None, :, None, axis] + c.positions[None, None, :, axis]
        for axis in (0, 1)
    )
    return np.hypot(dx, dy)
