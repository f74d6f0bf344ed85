import numpy as np
import pytest
from numpy.testing import assert_array_equal

from sinktrack.errors import InvalidInputError
from sinktrack.frame_loader_service import FRAME_COLUMNS, dump_frames, load_frames
from sinktrack.simlab import gen_constant_velocity_noisy


def test_dumped_frames_load_back_exactly(tmp_path):
    frames = gen_constant_velocity_noisy(n=6, m=0.5, sigma2=0.1, steps=4, seed=3)
    path = dump_frames(frames, tmp_path / "nested" / "frames.csv")

    assert path.read_text().splitlines()[0] == ",".join(FRAME_COLUMNS)
    loaded = load_frames(path)
    assert len(loaded) == 4
    assert loaded.n_objects == 6
    for original, restored in zip(frames.frames, loaded.frames):
        assert restored.frame_index == original.frame_index
        assert_array_equal(restored.positions, original.positions)


def test_frame_indices_may_start_anywhere(tmp_path):
    path = tmp_path / "frames.csv"
    path.write_text("frame,object_id,x,y\n5,0,0,0\n5,1,1,1\n6,0,0.5,0\n6,1,1.5,1\n")

    loaded = load_frames(path)
    assert [frame.frame_index for frame in loaded.frames] == [5, 6]
    assert_array_equal(loaded.frames[1].positions, np.array([[0.5, 0.0], [1.5, 1.0]]))


@pytest.mark.parametrize(
    "content, message",
    [
        ("frame,id,x,y\n0,0,0,0\n", "header"),
        ("frame,object_id,x,y\n", "no rows"),
        ("frame,object_id,x,y\n1,0,0,0\n0,0,0,0\n", "sorted"),
        ("frame,object_id,x,y\n0,1,0,0\n0,2,1,1\n", "0..n-1"),
        ("frame,object_id,x,y\n0,0,0,0\n0,1,1,1\n1,0,0,0\n", "objects"),
        ("frame,object_id,x,y\n0,0,0,0\n2,0,1,1\n", "consecutive"),
        ("", "not a frame CSV"),
        ("frame,object_id,x,y\n0,0,abc,1\n", "non-numeric"),
        ("frame,object_id,x,y\n0,0,1,1\n0,1,1,1,7\n", "not a frame CSV"),
        ("frame,object_id,x,y\n0,0,,1\n", "non-finite"),
    ],
)
def test_load_frames_rejects_malformed_files(tmp_path, content, message):
    path = tmp_path / "frames.csv"
    path.write_text(content)

    with pytest.raises(InvalidInputError, match=message) as excinfo:
        load_frames(path)
    assert str(path) in str(excinfo.value)


def test_load_frames_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_frames(tmp_path / "absent.csv")
