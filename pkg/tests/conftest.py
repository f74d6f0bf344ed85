import logging

import numpy as np
import pytest

from sinktrack.entities import PointSet


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def separated_tracks():
    """Five objects on a wide lattice with distinct constant velocities.

    Every triple other than (i, i, i) has acceleration cost of at least 2.
    """
    starts = np.array([[10.0 * i, 0.0] for i in range(5)])
    velocities = np.array([[0.0, float(i)] for i in range(5)])
    return tuple(PointSet(positions=starts + t * velocities, frame_index=t) for t in range(3))


@pytest.fixture(autouse=True)
def _drop_cli_log_handlers():
    yield
    root = logging.getLogger()
    for handler in [h for h in root.handlers if getattr(h, "_sinktrack", False)]:
        root.removeHandler(handler)
        handler.close()
