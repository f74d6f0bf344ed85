import pytest

from sinktrack.entities import RESULT_COLUMNS, ResultRow
from sinktrack.errors import InvalidInputError, UnknownColumnError
from sinktrack.presenters import (
    BoxplotPresenter,
    LineplotPresenter,
    TextPresenter,
    box_stats,
    emit_csv,
    emit_figure,
    get_presenter,
    read_results,
    rows_to_frame,
)


def _row(method="speed", sigma2=0.0, index=0.5, replicate=0, **overrides):
    values = dict(
        sim_id=3,
        method=method,
        n=10,
        m=0.0,
        sigma2=sigma2,
        lambda_=100.0,
        seed=1000 + replicate,
        performance_index=index,
        iterations=12,
        converged=True,
    )
    values.update(overrides)
    return ResultRow(**values)


@pytest.fixture
def rows():
    return [
        _row(method, sigma2, index=(k + 1) / (8 + j), replicate=k)
        for j, sigma2 in enumerate([0.1, 0.5])
        for method in ("speed", "accel3d")
        for k in range(4)
    ]


def test_empty_rows_give_header_only_csv(tmp_path):
    path = emit_csv([], tmp_path / "empty.csv")

    assert path.read_text() == ",".join(RESULT_COLUMNS) + "\n"
    assert read_results(path) == []


def test_one_row_gives_two_lines(tmp_path):
    path = emit_csv([_row()], tmp_path / "one.csv")

    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[1] == "3,speed,10,0,0,100,1000,0.5,12,True,0"


def test_results_round_trip(tmp_path, rows):
    path = emit_csv(rows, tmp_path / "out" / "results.csv")

    assert len(path.read_text().splitlines()) == len(rows) + 1
    assert read_results(path) == rows


def test_floats_are_kept_at_six_significant_digits(tmp_path):
    row = _row(index=2 / 3, lambda_=1 / 3, runtime_ms=12.3456789)
    assert row.performance_index == 0.666667
    assert row.lambda_ == 0.333333

    path = emit_csv([row], tmp_path / "digits.csv")
    assert "0.666667" in path.read_text()
    assert read_results(path) == [row]


def test_result_row_rejects_index_outside_unit_interval():
    with pytest.raises(InvalidInputError):
        _row(index=1.5)


def test_read_results_rejects_foreign_csv(tmp_path):
    path = tmp_path / "frames.csv"
    path.write_text("frame,object_id,x,y\n0,0,0,0\n")

    with pytest.raises(InvalidInputError, match="not a results file"):
        read_results(path)


@pytest.mark.parametrize(
    "content",
    [
        "",
        ",".join(RESULT_COLUMNS) + "\n3,speed,ten,0,0,100,1000,0.5,12,True,0\n",
        ",".join(RESULT_COLUMNS) + "\n3,speed,10,0,0,100,1000,1.5,12,True,0\n",
    ],
)
def test_read_results_rejects_malformed_files(tmp_path, content):
    path = tmp_path / "results.csv"
    path.write_text(content)

    with pytest.raises(InvalidInputError) as excinfo:
        read_results(path)
    assert str(path) in str(excinfo.value)


def test_box_stats_order_statistics():
    stats = box_stats([0.0, 0.25, 0.5, 0.75, 1.0])

    assert stats["median"] == 0.5
    assert stats["q1"] == 0.25
    assert stats["q3"] == 0.75
    assert stats["whisker_low"] == 0.0
    assert stats["whisker_high"] == 1.0
    assert stats["outliers"] == []


def test_box_stats_degenerate_box():
    stats = box_stats([0.4] * 6)

    assert stats["median"] == stats["q1"] == stats["q3"] == 0.4
    assert stats["outliers"] == []


def test_box_stats_flags_outliers():
    stats = box_stats([0.4, 0.5, 0.5, 0.6, 0.5, 0.0])

    assert stats["outliers"] == [0.0]
    assert stats["whisker_low"] == 0.4
    assert stats["whisker_high"] == 0.6


def test_summary_groups_by_keys_and_method(rows):
    summary = TextPresenter().summarize(rows_to_frame(rows), ["sigma2"])

    assert list(summary.columns[:2]) == ["sigma2", "method"]
    assert len(summary) == 4
    assert summary["count"].tolist() == [4, 4, 4, 4]


def test_text_summary_lists_every_group(rows):
    text = get_presenter("text").present(rows_to_frame(rows), ["sigma2"], "Simulation 3")

    assert "Simulation 3" in text
    assert text.count("accel3d") == 2
    assert text.count("speed") == 2


def test_unknown_group_key_is_rejected(rows, tmp_path):
    with pytest.raises(UnknownColumnError, match="bogus"):
        emit_figure(rows, "boxplot", ["bogus"], tmp_path / "fig.svg")


def test_boxplot_is_standalone_and_deterministic(rows, tmp_path):
    first = emit_figure(rows, "boxplot", ["sigma2"], tmp_path / "a.svg")
    second = emit_figure(rows, "boxplot", ["sigma2"], tmp_path / "b.svg")

    content = first.read_text()
    assert content.lstrip().startswith("<?xml")
    assert "<svg" in content
    assert first.read_bytes() == second.read_bytes()


def test_figure_extension_is_added(rows, tmp_path):
    written = emit_figure(rows, "lineplot", ["sigma2"], tmp_path / "trend")
    assert written.name == "trend.svg"
    assert written.exists()


def test_lineplot_needs_numeric_x_axis(rows):
    with pytest.raises(InvalidInputError, match="numeric"):
        LineplotPresenter().present(rows_to_frame(rows), ["method"])


def test_figures_need_rows(tmp_path):
    with pytest.raises(InvalidInputError):
        emit_figure([], "boxplot", ["n"], tmp_path / "fig.svg")


@pytest.mark.parametrize(
    "kind, presenter",
    [("text", TextPresenter), ("boxplot", BoxplotPresenter), ("LinePlot", LineplotPresenter)],
)
def test_get_presenter(kind, presenter):
    assert isinstance(get_presenter(kind), presenter)


def test_get_presenter_rejects_unknown_kind():
    with pytest.raises(InvalidInputError):
        get_presenter("pdf")
