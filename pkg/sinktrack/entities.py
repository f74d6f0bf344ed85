"""
Core entity models for the sinktrack tracking system.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .errors import InvalidInputError


class Method(str, Enum):
    """Tracking pipelines that can be benchmarked."""

    SPEED = "speed"
    ACCEL3D = "accel3d"
    ACCEL2D = "accel2d"


class OutputAxis(str, Enum):
    """Which pair of frames a compressed 3-way plan associates."""

    IJ = "ij"  # t -> t+1
    IK = "ik"  # t -> t+2


class Stage3(str, Enum):
    """How the Acceleration (2D) baseline links predictions to the third frame."""

    SINKHORN = "sinkhorn"
    GREEDY = "greedy"


class SimKind(str, Enum):
    """Simulation protocols."""

    CONSTANT_VELOCITY = "constant_velocity"
    RANDOM_WALK = "random_walk"
    CONSTANT_VELOCITY_NOISY = "constant_velocity_noisy"


class NoiseModel(str, Enum):
    """How measurement noise enters a noisy constant-velocity sequence."""

    POSITIONAL = "positional"
    ACCUMULATED = "accumulated"


@dataclass(frozen=True)
class SolverOptions:
    """Entropic solver settings shared by the 2- and 3-marginal solvers."""

    lambda_: float = 100.0
    tolerance: float = 1e-9
    max_iterations: int = 10000
    stabilized: bool = False

    def __post_init__(self):
        if not (self.lambda_ > 0 and math.isfinite(self.lambda_)):
            raise InvalidInputError(f"lambda must be a positive finite number, got {self.lambda_}")
        if not self.tolerance > 0:
            raise InvalidInputError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise InvalidInputError(f"max_iterations must be at least 1, got {self.max_iterations}")


@dataclass
class PointSet:
    """Coordinates of n labeled objects at one time point; object identity is the row index."""

    positions: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[1] != 2:
            raise InvalidInputError(f"positions must have shape (n, 2), got {self.positions.shape}")
        if self.positions.shape[0] < 1:
            raise InvalidInputError("a point set needs at least one object")
        if not np.all(np.isfinite(self.positions)):
            raise InvalidInputError(f"frame {self.frame_index} contains non-finite coordinates")

    def __len__(self) -> int:
        return self.positions.shape[0]


@dataclass
class FrameSequence:
    """Ordered frames with equal object counts and consecutive frame indices."""

    frames: List[PointSet]

    def __post_init__(self):
        if not self.frames:
            raise InvalidInputError("a frame sequence needs at least one frame")
        n = len(self.frames[0])
        start = self.frames[0].frame_index
        for offset, frame in enumerate(self.frames):
            if len(frame) != n:
                raise InvalidInputError(
                    f"frame {frame.frame_index} has {len(frame)} objects, expected {n}"
                )
            if frame.frame_index != start + offset:
                raise InvalidInputError(
                    f"frame indices must be consecutive, got {frame.frame_index} at position {offset}"
                )

    @property
    def n_objects(self) -> int:
        """Number of objects tracked in every frame."""
        return len(self.frames[0])

    def __len__(self) -> int:
        return len(self.frames)

    def pair(self, t: int = 0) -> tuple[PointSet, PointSet]:
        """Frames t and t+1."""
        return self.frames[t], self.frames[t + 1]

    def triple(self, t: int = 0) -> tuple[PointSet, PointSet, PointSet]:
        """Frames t, t+1 and t+2."""
        return self.frames[t], self.frames[t + 1], self.frames[t + 2]


@dataclass
class TransportPlan:
    """Coupling over the 2-marginal transport polytope, with solver diagnostics."""

    entries: np.ndarray
    iterations: int
    converged: bool
    marginal_residual: float


@dataclass
class TransportTensor3:
    """Coupling over the 3-marginal transport polytope, with solver diagnostics."""

    entries: np.ndarray
    iterations: int
    converged: bool
    marginal_residual: float


@dataclass
class TrackingResult:
    """Association matrix produced by one tracking pipeline and its score."""

    association: np.ndarray
    assignment: np.ndarray
    performance_index: float
    method: Method
    iterations: int = 0
    converged: bool = True
    runtime_ms: float = 0.0


class SimScenario(BaseModel):
    """One simulation protocol instance; validated on construction."""

    kind: SimKind
    n: int = Field(ge=1)
    m: float = Field(0.0, ge=0)
    sigma2: float = Field(0.0, ge=0)
    steps: int = Field(3, ge=2)
    seed: int = Field(0, ge=0)
    noise_model: NoiseModel = NoiseModel.POSITIONAL


class ExperimentConfig(BaseModel):
    """Declarative description of a simulation grid run."""

    sim_id: int = Field(ge=1, le=4)
    n_values: List[int] = Field(min_length=1)
    m_values: List[float] = Field(default_factory=lambda: [0.0], min_length=1)
    sigma2_values: List[float] = Field(default_factory=lambda: [0.0], min_length=1)
    methods: List[Method] = Field(min_length=1)
    lambdas: List[float] = Field(default_factory=lambda: [100.0], min_length=1)
    replicates: int = Field(10, ge=1)
    base_seed: int = Field(0, ge=0)
    steps: int = Field(3, ge=3)
    tolerance: float = Field(1e-9, gt=0)
    max_iterations: int = Field(10000, ge=1)
    stabilized: bool = True
    noise_model: NoiseModel = NoiseModel.POSITIONAL
    stage3: Stage3 = Stage3.SINKHORN
    record_runtime: bool = False
    dump_frames_dir: Optional[str] = None

    @model_validator(mode="after")
    def _grid_is_valid(self) -> "ExperimentConfig":
        if any(n < 1 for n in self.n_values):
            raise ValueError("every n must be at least 1")
        if any(m < 0 for m in self.m_values) or any(s < 0 for s in self.sigma2_values):
            raise ValueError("m and sigma2 must be non-negative")
        if any(not lam > 0 for lam in self.lambdas):
            raise ValueError("every lambda must be positive")
        return self


def _sig6(value: float) -> float:
    return float(f"{value:.6g}")


@dataclass
class ResultRow:
    """One record of the results CSV; floats are kept at 6 significant digits."""

    sim_id: int
    method: str
    n: int
    m: float
    sigma2: float
    lambda_: float
    seed: int
    performance_index: float
    iterations: int
    converged: bool
    runtime_ms: float = 0.0

    def __post_init__(self):
        """Normalise floats so a CSV round-trip reproduces the row exactly."""
        self.m = _sig6(self.m)
        self.sigma2 = _sig6(self.sigma2)
        self.lambda_ = _sig6(self.lambda_)
        self.performance_index = _sig6(self.performance_index)
        self.runtime_ms = _sig6(self.runtime_ms)
        if not 0.0 <= self.performance_index <= 1.0:
            raise InvalidInputError(f"performance_index must lie in [0, 1], got {self.performance_index}")


RESULT_COLUMNS = [
    "sim_id",
    "method",
    "n",
    "m",
    "sigma2",
    "lambda",
    "seed",
    "performance_index",
    "iterations",
    "converged",
    "runtime_ms",
]
