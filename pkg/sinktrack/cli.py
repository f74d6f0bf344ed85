#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Command-line interface for Sinkhorn-based multi-object tracking experiments.
"""

import logging
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, NoReturn, Optional, cast

import numpy as np
import pandas as pd
import typer
from pydantic import ValidationError

try:  # newer typer releases vendor their own click
    from typer._click import exceptions as click
except ImportError:
    import click

from .config import load_settings, setup_logging
from .entities import (
    ExperimentConfig,
    Method,
    NoiseModel,
    OutputAxis,
    SolverOptions,
    Stage3,
)
from .errors import ConfigurationError, InvalidInputError, SinktrackError, UnknownColumnError
from .experiment_service import ExperimentService
from .frame_loader_service import load_frames
from .parse_utils import parse_columns, parse_float_list, parse_methods
from .presenters import emit_csv, emit_figure, get_presenter, read_results, rows_to_frame
from .tracker import track_sequence

LOGGER = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_RUNTIME = 2


class PlotKind(str, Enum):
    BOXPLOT = "boxplot"
    LINEPLOT = "lineplot"


@dataclass
class SimulationGrid:
    """Class to resolve the parameter grid of a run from a simulation preset and CLI overrides."""

    sim: int
    n: Optional[List[int]] = None
    m: Optional[List[float]] = None
    sigma2: Optional[List[float]] = None
    methods: Optional[List[Method]] = None
    group_keys: List[str] = field(default_factory=list)

    PRESETS = {
        1: {"n": [100], "m": [0.5], "sigma2": [0.0], "methods": [Method.SPEED, Method.ACCEL3D], "group_keys": ["n", "m"]},
        2: {"n": [100], "m": [2.0], "sigma2": [0.0], "methods": [Method.ACCEL3D, Method.ACCEL2D], "group_keys": ["n", "m"]},
        3: {
            "n": [100],
            "m": [0.0],
            "sigma2": [0.1, 0.5, 1.0, 1.5, 2.0],
            "methods": [Method.SPEED, Method.ACCEL3D],
            "group_keys": ["sigma2"],
        },
        4: {
            "n": [100],
            "m": [0.5],
            "sigma2": [0.01, 0.05, 0.10, 0.25],
            "methods": [Method.SPEED, Method.ACCEL3D],
            "group_keys": ["sigma2"],
        },
    }

    def __post_init__(self):
        """Fill every grid axis the caller did not set from the simulation preset."""
        preset = self.PRESETS[self.sim]
        self.n = self.n or preset["n"]
        self.m = self.m or preset["m"]
        self.sigma2 = self.sigma2 or preset["sigma2"]
        self.methods = self.methods or preset["methods"]
        self.group_keys = self.group_keys or preset["group_keys"]


# Create a Typer app instance
app = typer.Typer(help="Sinkhorn optimal-transport tracking of point objects", no_args_is_help=True)


def _fail(message: str) -> NoReturn:
    LOGGER.error(message)
    raise typer.Exit(code=EXIT_RUNTIME)


@app.callback()
def configure(
    log_file: Optional[str] = typer.Option(None, help="Also write the log to this file"),
):
    """
    Track point objects across frames with entropic optimal transport.
    """
    try:
        settings = load_settings()
    except ConfigurationError as exc:
        setup_logging()
        _fail(str(exc))
    setup_logging(settings.log_level, log_file)


@app.command()
def run(
    sim: int = typer.Option(..., min=1, max=4, help="Simulation protocol (1-4)"),
    n: Optional[List[int]] = typer.Option(None, "--n", help="Object count; repeat for a grid"),
    m: Optional[List[float]] = typer.Option(None, "--m", help="Speed multiplier; repeat for a grid"),
    sigma2: Optional[List[float]] = typer.Option(None, "--sigma2", help="Noise or step variance; repeat for a grid"),
    methods: Optional[str] = typer.Option(None, help="Comma-separated methods: speed,accel3d,accel2d", callback=parse_methods),
    lambda_: float = typer.Option(100.0, "--lambda", help="Regularization parameter lambda"),
    lambda_sweep: Optional[str] = typer.Option(None, help="Comma-separated lambdas; overrides --lambda", callback=parse_float_list),
    replicates: int = typer.Option(10, min=1, help="Datasets generated per grid point"),
    base_seed: int = typer.Option(0, min=0, help="Seed every replicate seed is derived from"),
    steps: int = typer.Option(3, min=3, help="Frames generated per dataset"),
    tolerance: float = typer.Option(1e-9, help="L1 marginal residual at which the solver stops"),
    max_iterations: int = typer.Option(10000, min=1, help="Solver iteration cap"),
    stabilized: bool = typer.Option(True, "--stabilized/--no-stabilized", help="Absorb scalings into log-potentials and warm-start lambda"),
    noise_model: NoiseModel = typer.Option(NoiseModel.POSITIONAL, help="Noise model of simulation 4"),
    stage3: Stage3 = typer.Option(Stage3.SINKHORN, help="Third-frame linking of the accel2d baseline"),
    timings: bool = typer.Option(False, "--timings/--no-timings", help="Record wall-clock runtime_ms (breaks byte-identical output)"),
    dump_frames: Optional[Path] = typer.Option(None, help="Directory to export generated frames to"),
    out: Path = typer.Option(..., help="Results CSV path"),
):
    """
    Run a simulation grid and write one CSV row per grid point, method and replicate.
    """
    grid = SimulationGrid(sim=sim, n=n, m=m, sigma2=sigma2, methods=cast(Optional[List[Method]], methods))
    lambdas = cast(Optional[List[float]], lambda_sweep) or [lambda_]
    try:
        config = ExperimentConfig(
            sim_id=sim,
            n_values=grid.n,
            m_values=grid.m,
            sigma2_values=grid.sigma2,
            methods=grid.methods,
            lambdas=lambdas,
            replicates=replicates,
            base_seed=base_seed,
            steps=steps,
            tolerance=tolerance,
            max_iterations=max_iterations,
            stabilized=stabilized,
            noise_model=noise_model,
            stage3=stage3,
            record_runtime=timings,
            dump_frames_dir=str(dump_frames) if dump_frames else None,
        )
    except ValidationError as exc:
        raise typer.BadParameter(str(exc))
    LOGGER.info(f"Grid: n={grid.n} m={grid.m} sigma2={grid.sigma2} lambda={lambdas}, methods {[x.value for x in grid.methods]}")

    settings = load_settings()
    try:
        rows = ExperimentService(config, settings.worker_count).run_experiment()
    except OSError as exc:
        _fail(f"Could not export frames to [{dump_frames}]: {exc}")
    except SinktrackError as exc:
        _fail(f"Experiment failed: {exc}")

    try:
        emit_csv(rows, out)
    except OSError as exc:
        _fail(f"Could not write results to [{out}]: {exc}")
    LOGGER.info(f"Results have been written to [{out}]")

    summary_keys = grid.group_keys + (["lambda"] if len(lambdas) > 1 else [])
    LOGGER.info(get_presenter("text").present(rows_to_frame(rows), summary_keys, f"Simulation {sim}"))


@app.command()
def plot(
    input_path: Path = typer.Option(..., "--in", help="Results CSV written by `run`"),
    kind: PlotKind = typer.Option(..., help="boxplot or lineplot"),
    group_by: str = typer.Option(..., help="Comma-separated result columns to group by"),
    out: Path = typer.Option(..., help="SVG output path"),
):
    """
    Draw a boxplot or line plot of the performance index from a results CSV.
    """
    try:
        rows = read_results(input_path)
    except OSError as exc:
        _fail(f"Could not read results from [{input_path}]: {exc}")
    except InvalidInputError as exc:
        raise typer.BadParameter(str(exc), param_hint="--in")

    try:
        written = emit_figure(rows, kind.value, parse_columns(group_by), out)
    except UnknownColumnError as exc:
        raise typer.BadParameter(str(exc), param_hint="--group-by")
    except OSError as exc:
        _fail(f"Could not write figure to [{out}]: {exc}")
    except SinktrackError as exc:
        _fail(str(exc))
    LOGGER.info(f"Figure has been written to [{written}]")


@app.command()
def track(
    frames: Path = typer.Option(..., help="Frame CSV (frame,object_id,x,y)"),
    method: Method = typer.Option(..., help="speed, accel3d or accel2d"),
    lambda_: float = typer.Option(100.0, "--lambda", help="Regularization parameter lambda"),
    stabilized: bool = typer.Option(True, "--stabilized/--no-stabilized", help="Absorb scalings into log-potentials and warm-start lambda"),
    stage3: Stage3 = typer.Option(Stage3.SINKHORN, help="Third-frame linking of the accel2d baseline"),
    window: int = typer.Option(0, min=0, help="Window (first frame offset) written to --out"),
    out: Path = typer.Option(..., help="Association CSV path (source_id,target_id,mass)"),
):
    """
    Track an imported frame sequence and write the association of one window.
    """
    try:
        sequence = load_frames(frames)
    except OSError as exc:
        _fail(f"Could not read frames from [{frames}]: {exc}")
    except InvalidInputError as exc:
        raise typer.BadParameter(str(exc), param_hint="--frames")

    try:
        opts = SolverOptions(lambda_=lambda_, stabilized=stabilized)
    except InvalidInputError as exc:
        raise typer.BadParameter(str(exc), param_hint="--lambda")

    try:
        results = track_sequence(sequence, method, opts, OutputAxis.IJ, stage3)
    except InvalidInputError as exc:
        raise typer.BadParameter(str(exc), param_hint="--frames")
    except SinktrackError as exc:
        _fail(str(exc))

    if window >= len(results):
        raise typer.BadParameter(f"the sequence has {len(results)} windows", param_hint="--window")
    association = results[window].association
    d = association.shape[0]
    table = pd.DataFrame(
        {
            "source_id": np.repeat(np.arange(d), d),
            "target_id": np.tile(np.arange(d), d),
            "mass": association.ravel(),
        }
    )
    try:
        if out.parent != Path("."):
            out.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(out, index=False, float_format="%.6g", lineterminator="\n")
    except OSError as exc:
        _fail(f"Could not write associations to [{out}]: {exc}")
    LOGGER.info(f"Association has been written to [{out}]")


def main():
    """Entry point for the CLI."""
    try:
        exit_code = app(standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except click.Abort:
        sys.exit(EXIT_RUNTIME)
    sys.exit(exit_code if isinstance(exit_code, int) else 0)


if __name__ == "__main__":
    main()
