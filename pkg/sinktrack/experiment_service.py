"""
Service that runs a simulation grid through the tracking pipelines.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from .entities import (
    ExperimentConfig,
    Method,
    OutputAxis,
    ResultRow,
    SimKind,
    SimScenario,
    SolverOptions,
)
from .frame_loader_service import dump_frames
from .simlab import RNG_ALGORITHM, generate, replicate_seed
from .tracker import track

LOGGER = logging.getLogger(__name__)

SIM_KINDS = {
    1: SimKind.CONSTANT_VELOCITY,
    2: SimKind.CONSTANT_VELOCITY,
    3: SimKind.RANDOM_WALK,
    4: SimKind.CONSTANT_VELOCITY_NOISY,
}


@dataclass(frozen=True)
class WorkItem:
    """One (grid point, method, replicate) cell of an experiment."""

    lambda_: float
    n: int
    m: float
    sigma2: float
    method: Method
    replicate: int


class ExperimentService:
    """
    Runs every grid point x method x replicate of an experiment and collects ResultRows.
    """

    def __init__(self, config: ExperimentConfig, worker_count: int = 1):
        """
        Initialize the experiment service.

        Args:
            config: The validated experiment description.
            worker_count: Maximum number of work items solved concurrently.
        """
        self.config = config
        self.worker_count = max(1, worker_count)

    @property
    def output_axis(self) -> OutputAxis:
        """Simulation 2 scores the 3-way plan on t -> t+2, the others on t -> t+1."""
        return OutputAxis.IK if self.config.sim_id == 2 else OutputAxis.IJ

    def work_items(self) -> List[WorkItem]:
        """All cells in emission order: grid (lambda, n, m, sigma2), then method, then replicate."""
        config = self.config
        return [
            WorkItem(lambda_=lam, n=n, m=m, sigma2=sigma2, method=method, replicate=replicate)
            for lam, n, m, sigma2, method, replicate in itertools.product(
                config.lambdas,
                config.n_values,
                config.m_values,
                config.sigma2_values,
                config.methods,
                range(config.replicates),
            )
        ]

    def scenario_for(self, item: WorkItem) -> SimScenario:
        """Simulation scenario (with its replicate seed) behind a work item."""
        kind = SIM_KINDS[self.config.sim_id]
        return SimScenario(
            kind=kind,
            n=item.n,
            m=0.0 if kind is SimKind.RANDOM_WALK else item.m,
            sigma2=0.0 if kind is SimKind.CONSTANT_VELOCITY else item.sigma2,
            steps=self.config.steps,
            seed=replicate_seed(self.config.base_seed, item.replicate),
            noise_model=self.config.noise_model,
        )

    def _dump_path(self, item: WorkItem) -> Optional[Path]:
        if not self.config.dump_frames_dir or item.method != self.config.methods[0]:
            return None
        name = f"sim{self.config.sim_id}_n{item.n}_m{item.m:g}_s{item.sigma2:g}_r{item.replicate}.csv"
        return Path(self.config.dump_frames_dir) / name

    def run_item(self, item: WorkItem) -> ResultRow:
        """Generate the frames of one work item, track them and score the association."""
        scenario = self.scenario_for(item)
        frames = generate(scenario)

        dump_path = self._dump_path(item)
        if dump_path is not None and item.lambda_ == self.config.lambdas[0]:
            dump_frames(frames, dump_path)

        opts = SolverOptions(
            lambda_=item.lambda_,
            tolerance=self.config.tolerance,
            max_iterations=self.config.max_iterations,
            stabilized=self.config.stabilized,
        )
        result = track(frames, item.method, 0, opts, self.output_axis, self.config.stage3)
        if not result.converged:
            LOGGER.warning(
                f"{item.method.value} did not converge for n={item.n} m={item.m:g} "
                f"sigma2={item.sigma2:g} lambda={item.lambda_:g} replicate={item.replicate}"
            )
        return ResultRow(
            sim_id=self.config.sim_id,
            method=item.method.value,
            n=item.n,
            m=scenario.m,
            sigma2=scenario.sigma2,
            lambda_=item.lambda_,
            seed=scenario.seed,
            performance_index=result.performance_index,
            iterations=result.iterations,
            converged=result.converged,
            runtime_ms=result.runtime_ms if self.config.record_runtime else 0.0,
        )

    def run_experiment(self) -> List[ResultRow]:
        """
        Run every work item, concurrently when worker_count > 1.

        Returns:
            One ResultRow per work item, in emission order regardless of completion order.
        """
        items = self.work_items()
        LOGGER.info(
            f"Running simulation {self.config.sim_id}: {len(items)} work items on {self.worker_count} workers "
            f"(rng {RNG_ALGORITHM}, base seed {self.config.base_seed})"
        )
        with ThreadPoolExecutor(max_workers=self.worker_count) as executor:
            rows = list(executor.map(self.run_item, items))
        LOGGER.info(f"Simulation {self.config.sim_id} finished: {len(rows)} rows.")
        return rows


def run_experiment(config: ExperimentConfig, worker_count: int = 1) -> List[ResultRow]:
    """Run an experiment and return its rows in deterministic order."""
    return ExperimentService(config, worker_count).run_experiment()
