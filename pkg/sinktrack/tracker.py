"""
Tracking pipelines built on entropic transport, and the diagonal performance index.
"""

import logging
import time
from typing import List, Optional

import numpy as np

from .entities import (
    FrameSequence,
    Method,
    OutputAxis,
    PointSet,
    SolverOptions,
    Stage3,
    TrackingResult,
)
from .errors import DimensionMismatchError, InvalidInputError
from .motion_costs import acceleration_cost, speed_cost
from .ot_core import sinkhorn_plan, uniform_mass
from .ot_multi import compress_ij, compress_ik, sinkhorn3_plan

LOGGER = logging.getLogger(__name__)


def _square(association) -> np.ndarray:
    association = np.asarray(association, dtype=float)
    if association.ndim != 2 or association.shape[0] != association.shape[1]:
        raise DimensionMismatchError(f"association must be a square matrix, got shape {association.shape}")
    return association


def performance_index(association) -> float:
    """
    Fraction of rows whose diagonal entry is the strict row maximum.

    Ground truth is the identity correspondence; a row whose diagonal ties an
    off-diagonal entry counts as a failure.

    Raises:
        DimensionMismatchError: If the matrix is not square.
        InvalidInputError: If an entry is negative.
    """
    association = _square(association)
    if np.any(association < 0):
        raise InvalidInputError("association entries must be non-negative")
    d = association.shape[0]
    if d == 1:
        return 1.0
    off_diagonal = association.copy()
    np.fill_diagonal(off_diagonal, -np.inf)
    correct = np.diag(association) > off_diagonal.max(axis=1)
    return int(correct.sum()) / d


def extract_assignment(association) -> np.ndarray:
    """Row-argmax of an association matrix (first column on ties)."""
    return np.argmax(_square(association), axis=1)


def _elapsed_ms(started: float) -> float:
    return (time.perf_counter() - started) * 1000.0


def track_speed(a: PointSet, b: PointSet, opts: Optional[SolverOptions] = None) -> TrackingResult:
    """
    Nearest-neighbor style tracking: transport frame t onto frame t+1 under the speed cost.
    """
    started = time.perf_counter()
    n = len(a)
    plan = sinkhorn_plan(speed_cost(a, b), uniform_mass(n), uniform_mass(n), opts)
    return TrackingResult(
        association=plan.entries,
        assignment=extract_assignment(plan.entries),
        performance_index=performance_index(plan.entries),
        method=Method.SPEED,
        iterations=plan.iterations,
        converged=plan.converged,
        runtime_ms=_elapsed_ms(started),
    )


def track_accel_3d(
    a: PointSet,
    b: PointSet,
    c: PointSet,
    opts: Optional[SolverOptions] = None,
    output_axis: OutputAxis = OutputAxis.IJ,
) -> TrackingResult:
    """
    Constant-velocity tracking through the 3-marginal plan under the acceleration cost.

    Args:
        a, b, c: Frames t, t+1 and t+2.
        opts: Solver settings.
        output_axis: IJ compresses to the t -> t+1 association, IK to t -> t+2.
    """
    started = time.perf_counter()
    n = len(a)
    mass = uniform_mass(n)
    plan = sinkhorn3_plan(acceleration_cost(a, b, c), mass, mass, mass, opts)
    association = compress_ij(plan) if OutputAxis(output_axis) is OutputAxis.IJ else compress_ik(plan)
    return TrackingResult(
        association=association,
        assignment=extract_assignment(association),
        performance_index=performance_index(association),
        method=Method.ACCEL3D,
        iterations=plan.iterations,
        converged=plan.converged,
        runtime_ms=_elapsed_ms(started),
    )


def predict_positions(a: PointSet, b: PointSet, assignment: np.ndarray) -> PointSet:
    """Constant-velocity extrapolation q_i = 2 b_sigma(i) - a_i one frame past b."""
    predicted = 2.0 * b.positions[assignment] - a.positions
    return PointSet(positions=predicted, frame_index=b.frame_index + 1)


def track_accel_2d(
    a: PointSet,
    b: PointSet,
    c: PointSet,
    opts: Optional[SolverOptions] = None,
    stage3: Stage3 = Stage3.SINKHORN,
) -> TrackingResult:
    """
    Two-stage constant-velocity baseline evaluated on the t -> t+2 association.

    Stage 1 links t -> t+1 by speed-cost transport, stage 2 extrapolates every
    object at constant velocity, stage 3 links the predictions to frame t+2,
    either by a second speed-cost transport or greedily to the nearest object.
    """
    started = time.perf_counter()
    first = track_speed(a, b, opts)
    predicted = predict_positions(a, b, first.assignment)

    n = len(a)
    if Stage3(stage3) is Stage3.GREEDY:
        nearest = np.argmin(speed_cost(predicted, c), axis=1)
        association = np.zeros((n, n))
        association[np.arange(n), nearest] = 1.0 / n
        iterations, converged = first.iterations, first.converged
    else:
        plan = sinkhorn_plan(speed_cost(predicted, c), uniform_mass(n), uniform_mass(n), opts)
        association = plan.entries
        iterations = first.iterations + plan.iterations
        converged = first.converged and plan.converged

    return TrackingResult(
        association=association,
        assignment=extract_assignment(association),
        performance_index=performance_index(association),
        method=Method.ACCEL2D,
        iterations=iterations,
        converged=converged,
        runtime_ms=_elapsed_ms(started),
    )


def track(
    frames: FrameSequence,
    method: Method,
    t: int = 0,
    opts: Optional[SolverOptions] = None,
    output_axis: OutputAxis = OutputAxis.IJ,
    stage3: Stage3 = Stage3.SINKHORN,
) -> TrackingResult:
    """Run one method on the window of frames starting at t."""
    method = Method(method)
    if method is Method.SPEED:
        return track_speed(*frames.pair(t), opts)
    if method is Method.ACCEL3D:
        return track_accel_3d(*frames.triple(t), opts, output_axis)
    return track_accel_2d(*frames.triple(t), opts, stage3)


def track_sequence(
    frames: FrameSequence,
    method: Method,
    opts: Optional[SolverOptions] = None,
    output_axis: OutputAxis = OutputAxis.IJ,
    stage3: Stage3 = Stage3.SINKHORN,
) -> List[TrackingResult]:
    """
    Run a method over every window of a sequence: pairs for speed, triples otherwise.

    Raises:
        InvalidInputError: If the sequence is shorter than one window.
    """
    window = 2 if Method(method) is Method.SPEED else 3
    if len(frames) < window:
        raise InvalidInputError(f"method {Method(method).value} needs at least {window} frames, got {len(frames)}")
    results = []
    for t in range(len(frames) - window + 1):
        result = track(frames, method, t, opts, output_axis, stage3)
        LOGGER.info(
            f"Window starting at frame {frames.frames[t].frame_index}: "
            f"performance index {result.performance_index:.3f} ({result.iterations} iterations)"
        )
        results.append(result)
    return results
