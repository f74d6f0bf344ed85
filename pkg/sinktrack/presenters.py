"""
Presenters for results tables: CSV persistence, text summaries and SVG figures.
"""

import io
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from matplotlib import cbook  # noqa: E402

from .entities import RESULT_COLUMNS, ResultRow  # noqa: E402
from .errors import InvalidInputError, UnknownColumnError  # noqa: E402

_CSV_DTYPES = {
    "sim_id": int,
    "method": str,
    "n": int,
    "m": float,
    "sigma2": float,
    "lambda": float,
    "seed": np.int64,
    "performance_index": float,
    "iterations": int,
    "converged": bool,
    "runtime_ms": float,
}

# Fixed hash salt and no date metadata keep the SVG output byte-stable.
_SVG_RC = {"svg.hashsalt": "sinktrack", "svg.fonttype": "path"}
WHISKER_IQR = 1.5


def rows_to_frame(rows: Sequence[ResultRow]) -> pd.DataFrame:
    """Tabulate ResultRows with the CSV column names."""
    records = [
        {
            "sim_id": row.sim_id,
            "method": row.method,
            "n": row.n,
            "m": row.m,
            "sigma2": row.sigma2,
            "lambda": row.lambda_,
            "seed": row.seed,
            "performance_index": row.performance_index,
            "iterations": row.iterations,
            "converged": row.converged,
            "runtime_ms": row.runtime_ms,
        }
        for row in rows
    ]
    return pd.DataFrame.from_records(records, columns=RESULT_COLUMNS)


def emit_csv(rows: Sequence[ResultRow], path: Union[str, Path]) -> Path:
    """
    Write ResultRows as CSV with floats at 6 significant digits.

    Raises:
        OSError: If the file cannot be written.
    """
    path = Path(path)
    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)
    rows_to_frame(rows).to_csv(path, index=False, float_format="%.6g", lineterminator="\n")
    return path


def read_results(path: Union[str, Path]) -> List[ResultRow]:
    """
    Parse a results CSV back into ResultRows.

    Raises:
        InvalidInputError: If the file is not a well-formed results CSV.
        OSError: If the file cannot be read.
    """
    try:
        frame = pd.read_csv(path, dtype=_CSV_DTYPES)
    except (pd.errors.EmptyDataError, pd.errors.ParserError, ValueError) as exc:
        raise InvalidInputError(f"[{path}] is not a readable results file: {exc}") from exc
    if list(frame.columns) != RESULT_COLUMNS:
        raise InvalidInputError(f"[{path}] is not a results file; header must be {','.join(RESULT_COLUMNS)}")
    try:
        return [
            ResultRow(
                sim_id=int(record.sim_id),
                method=str(record.method),
                n=int(record.n),
                m=float(record.m),
                sigma2=float(record.sigma2),
                lambda_=float(record.lambda_),
                seed=int(record.seed),
                performance_index=float(record.performance_index),
                iterations=int(record.iterations),
                converged=bool(record.converged),
                runtime_ms=float(record.runtime_ms),
            )
            for record in frame.rename(columns={"lambda": "lambda_"}).itertuples(index=False)
        ]
    except InvalidInputError as exc:
        raise InvalidInputError(f"[{path}] {exc}") from exc


def box_stats(values: Sequence[float]) -> Dict[str, object]:
    """
    Numbers drawn by one box: median, quartiles (linear interpolation), whiskers
    at the extreme data within 1.5 IQR of the box, and the outliers beyond.
    """
    stats = cbook.boxplot_stats(np.asarray(values, dtype=float), whis=WHISKER_IQR)[0]
    return {
        "median": float(stats["med"]),
        "q1": float(stats["q1"]),
        "q3": float(stats["q3"]),
        "whisker_low": float(stats["whislo"]),
        "whisker_high": float(stats["whishi"]),
        "outliers": [float(x) for x in stats["fliers"]],
    }


class BasePresenter:
    """Base class for presenters."""

    extension = ""

    def check_group_keys(self, frame: pd.DataFrame, group_keys: Sequence[str]) -> List[str]:
        """
        Validate grouping columns and return them with `method` appended.

        Raises:
            UnknownColumnError: If a key is not a results column.
        """
        unknown = [key for key in group_keys if key not in frame.columns]
        if unknown:
            raise UnknownColumnError(f"unknown group key(s) {', '.join(unknown)}; choose from {', '.join(RESULT_COLUMNS)}")
        keys = list(dict.fromkeys(group_keys))
        if "method" not in keys:
            keys.append("method")
        return keys

    def summarize(self, frame: pd.DataFrame, group_keys: Sequence[str]) -> pd.DataFrame:
        """
        Aggregate the performance index per group.

        Returns:
            pd.DataFrame: one row per group with replicate count, mean, median, min and max.
        """
        keys = self.check_group_keys(frame, group_keys)
        return (
            frame.groupby(keys, sort=True)["performance_index"]
            .agg(["count", "mean", "median", "min", "max"])
            .reset_index()
        )

    @staticmethod
    def group_label(keys: Sequence[str], values) -> str:
        """Axis label for one group, e.g. `n=100 m=0.5`."""
        if not isinstance(values, tuple):
            values = (values,)
        return " ".join(f"{key}={value:g}" if isinstance(value, float) else f"{key}={value}" for key, value in zip(keys, values))

    def present(self, frame: pd.DataFrame, group_keys: Sequence[str], title: Optional[str] = None) -> str:
        """
        Render the results table.

        Args:
            frame: Results table as produced by rows_to_frame.
            group_keys: Columns whose combinations form the groups.
            title: Optional heading.

        Returns:
            str: The rendered output.
        """
        raise NotImplementedError("Subclasses must implement this method")

    def write_to_file(self, path: Union[str, Path], content: str) -> Path:
        """Write content to a file with the presenter's extension."""
        path = Path(path)
        if self.extension and path.suffix != self.extension:
            path = path.with_name(path.name + self.extension)
        if path.parent != Path("."):
            path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as f:
            f.write(content)
        return path


class TextPresenter(BasePresenter):
    """Presenter for a plain text summary table."""

    extension = ".txt"

    def present(self, frame: pd.DataFrame, group_keys: Sequence[str], title: Optional[str] = None) -> str:
        """Format the mean performance index per group as a fixed-width table."""
        summary = self.summarize(frame, group_keys)
        keys = self.check_group_keys(frame, group_keys)

        output = [f"\n{title or 'Performance Index Summary'}", "=" * 80]
        header = "".join(f"{key:<12}" for key in keys) + f"{'Runs':<6} {'Mean':<8} {'Median':<8} {'Min':<8} {'Max':<8}"
        output.append(header)
        output.append("-" * 80)
        for record in summary.to_dict("records"):
            cells = "".join(f"{str(record[key]):<12}" for key in keys)
            output.append(
                f"{cells}{record['count']:<6} {record['mean']:<8.3f} {record['median']:<8.3f} "
                f"{record['min']:<8.3f} {record['max']:<8.3f}"
            )
        output.append("-" * 80)
        return "\n".join(output)


class FigurePresenter(BasePresenter):
    """Base class for matplotlib figures rendered to standalone SVG."""

    extension = ".svg"

    def draw(self, ax, frame: pd.DataFrame, keys: List[str]):
        raise NotImplementedError("Subclasses must implement this method")

    def present(self, frame: pd.DataFrame, group_keys: Sequence[str], title: Optional[str] = None) -> str:
        """Render the figure and return the SVG document."""
        if frame.empty:
            raise InvalidInputError("cannot draw a figure from an empty results table")
        keys = self.check_group_keys(frame, group_keys)
        with plt.rc_context(_SVG_RC):
            fig, ax = plt.subplots(figsize=(8, 5))
            try:
                self.draw(ax, frame, keys)
                ax.set_ylabel("performance index")
                ax.set_ylim(-0.05, 1.05)
                if title:
                    ax.set_title(title)
                fig.tight_layout()
                buffer = io.StringIO()
                fig.savefig(buffer, format="svg", metadata={"Date": None})
            finally:
                plt.close(fig)
        return buffer.getvalue()


class BoxplotPresenter(FigurePresenter):
    """One box per group and method, matplotlib's default 1.5 IQR whiskers."""

    def draw(self, ax, frame: pd.DataFrame, keys: List[str]):
        groups = list(frame.groupby(keys, sort=True)["performance_index"])
        ax.boxplot(
            [values.to_numpy() for _, values in groups],
            whis=WHISKER_IQR,
            flierprops={"marker": "o", "markerfacecolor": "white"},
        )
        ax.set_xticks(range(1, len(groups) + 1))
        ax.set_xticklabels([self.group_label(keys, label).replace(" ", "\n") for label, _ in groups], fontsize=8)


class LineplotPresenter(FigurePresenter):
    """Mean index against the first group key, one line per remaining group."""

    def draw(self, ax, frame: pd.DataFrame, keys: List[str]):
        x_key, series_keys = keys[0], keys[1:]
        if x_key == "method":
            raise InvalidInputError("a line plot needs a numeric column as its first group key")
        means = frame.groupby(keys, sort=True)["performance_index"].mean().reset_index()
        for label, series in means.groupby(series_keys, sort=True):
            ax.plot(series[x_key], series["performance_index"], marker="o", label=self.group_label(series_keys, label))
        ax.set_xlabel(x_key)
        ax.legend()


def get_presenter(kind: str = "text") -> BasePresenter:
    """
    Factory function to get the appropriate presenter based on output kind.

    Args:
        kind (str): 'text', 'boxplot' or 'lineplot'.

    Returns:
        BasePresenter: An instance of the appropriate presenter.
    """
    kind = kind.lower()
    if kind == "boxplot":
        return BoxplotPresenter()
    if kind == "lineplot":
        return LineplotPresenter()
    if kind == "text":
        return TextPresenter()
    raise InvalidInputError(f"unknown presenter kind {kind!r}")


def emit_figure(rows: Sequence[ResultRow], kind: str, group_keys: Sequence[str], path: Union[str, Path]) -> Path:
    """
    Render a boxplot or line plot of ResultRows to an SVG file.

    Raises:
        InvalidInputError: If rows is empty.
        UnknownColumnError: If a group key is not a results column.
    """
    if not rows:
        raise InvalidInputError("cannot draw a figure without result rows")
    presenter = get_presenter(kind)
    content = presenter.present(rows_to_frame(rows), group_keys)
    return presenter.write_to_file(path, content)
