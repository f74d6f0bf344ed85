"""
Dense two-marginal entropic optimal transport solved by Sinkhorn-Knopp scaling,
plus an exhaustive assignment oracle used to check it at desk scale.
"""

import itertools
import logging
from dataclasses import dataclass
from functools import partial
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .entities import SolverOptions, TransportPlan
from .errors import DimensionMismatchError, InvalidInputError, NumericalInstabilityError

LOGGER = logging.getLogger(__name__)

# Largest lambda * max(cost) the plain kernel exp(-lambda * cost) is allowed to see.
STABILIZATION_THRESHOLD = 500.0
MASS_TOLERANCE = 1e-12
ORACLE_MAX_D = 10
_ORACLE_BATCH = 40320

ABSORB_THRESHOLD = 1e3
WARM_START_SCALE = 50.0
WARM_START_FACTOR = 4.0
WARM_START_ITERATIONS = 100
WARM_START_TOLERANCE = 1e-4
RELAXATION_START = 100
RELAXATION_WINDOW = 10
MAX_DECAY_RATIO = 0.99
DIVERGENCE_FACTOR = 100.0

PlanLike = Union[TransportPlan, np.ndarray]


def uniform_mass(d: int) -> np.ndarray:
    """Return the uniform mass vector of length d (every entry 1/d)."""
    if d < 1:
        raise InvalidInputError(f"mass vector length must be at least 1, got {d}")
    return np.full(d, 1.0 / d)


def check_mass_vector(weights, d: int, name: str = "mass vector") -> np.ndarray:
    """
    Validate a discrete probability vector of length d.

    Args:
        weights: Candidate weights.
        d: Expected length.
        name: Name used in error messages.

    Returns:
        The weights as a float array.

    Raises:
        DimensionMismatchError: If the length is not d.
        InvalidInputError: If an entry is negative or non-finite, or the entries do not sum to 1.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1 or weights.shape[0] != d:
        raise DimensionMismatchError(f"{name} must have length {d}, got shape {weights.shape}")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise InvalidInputError(f"{name} entries must be finite and non-negative")
    if abs(weights.sum() - 1.0) > MASS_TOLERANCE:
        raise InvalidInputError(f"{name} must sum to 1, got {weights.sum():.15g}")
    return weights


def check_cost(cost, ndim: int) -> np.ndarray:
    """
    Validate a square cost matrix (ndim=2) or cubic cost tensor (ndim=3).

    Raises:
        DimensionMismatchError: If the array is not d x d (x d).
        InvalidInputError: If an entry is negative or non-finite.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != ndim or cost.shape[0] < 1 or len(set(cost.shape)) != 1:
        raise DimensionMismatchError(
            f"cost must be a non-empty {'x'.join(['d'] * ndim)} array, got shape {cost.shape}"
        )
    if not np.all(np.isfinite(cost)):
        raise InvalidInputError("cost contains non-finite entries")
    if np.any(cost < 0):
        raise InvalidInputError("cost contains negative entries")
    return cost


def ensure_stable_scale(cost: np.ndarray, opts: SolverOptions):
    """Refuse to build exp(-lambda * cost) directly when it would underflow."""
    scale = opts.lambda_ * float(cost.max())
    if not opts.stabilized and scale > STABILIZATION_THRESHOLD:
        raise NumericalInstabilityError(
            f"lambda * max(cost) = {scale:.4g} exceeds {STABILIZATION_THRESHOLD:g}; "
            "the plain kernel would underflow, enable `stabilized` (log-domain updates)"
        )


def _entries(plan: PlanLike) -> np.ndarray:
    if isinstance(plan, TransportPlan):
        return plan.entries
    return np.asarray(plan, dtype=float)


def marginal_residual(plan: PlanLike, r, c) -> float:
    """
    L1 distance of the plan's row sums to r plus that of its column sums to c.

    Raises:
        DimensionMismatchError: If shapes disagree.
    """
    entries = _entries(plan)
    r = np.asarray(r, dtype=float)
    c = np.asarray(c, dtype=float)
    if entries.ndim != 2 or entries.shape != (r.shape[0], c.shape[0]):
        raise DimensionMismatchError(
            f"plan of shape {entries.shape} does not match marginals of length {r.shape[0]} and {c.shape[0]}"
        )
    return float(np.abs(entries.sum(axis=1) - r).sum() + np.abs(entries.sum(axis=0) - c).sum())


def transport_cost(plan: PlanLike, cost) -> float:
    """
    Frobenius inner product <P, M> of a plan and a cost matrix.

    Raises:
        DimensionMismatchError: If shapes disagree.
    """
    entries = _entries(plan)
    cost = np.asarray(cost, dtype=float)
    if entries.shape != cost.shape:
        raise DimensionMismatchError(f"plan shape {entries.shape} does not match cost shape {cost.shape}")
    return float(np.sum(entries * cost))


def lambda_schedule(cost_max: float, lambda_: float) -> List[float]:
    """
    Increasing regularization stages ending at lambda_.

    Each stage is WARM_START_FACTOR times the one before it and the first one
    has lambda * max(cost) <= WARM_START_SCALE, so its kernel is well conditioned
    even from zero potentials.
    """
    stages = [lambda_]
    while stages[0] * cost_max > WARM_START_SCALE:
        stages.insert(0, stages[0] / WARM_START_FACTOR)
    return stages


def relaxation_weight(residuals: List[float], omega: float = 1.0) -> float:
    """
    Over-relaxation weight 2 / (1 + sqrt(1 - rho)) for plain iterations that
    contract the residual by rho per step.

    mu, the per-step decay over the last RELAXATION_WINDOW residuals, was observed
    under the current weight omega; rho is recovered from (mu + omega - 1)^2 = mu omega^2 rho,
    which reduces to rho = mu for omega = 1. Returns omega unchanged when the
    history is too short or not decaying.
    """
    if len(residuals) <= RELAXATION_WINDOW:
        return omega
    ratio = residuals[-1] / residuals[-RELAXATION_WINDOW - 1]
    if not (np.isfinite(ratio) and ratio > 0):
        return omega
    ceiling = MAX_DECAY_RATIO ** (1.0 / RELAXATION_WINDOW)
    mu = min(ratio, MAX_DECAY_RATIO) ** (1.0 / RELAXATION_WINDOW)
    rho = min((mu + omega - 1.0) ** 2 / (mu * omega**2), ceiling)
    return float(2.0 / (1.0 + np.sqrt(1.0 - rho)))


def scaling_update(mass: np.ndarray, denominator: np.ndarray, iteration: int, stabilized: bool) -> np.ndarray:
    """mass / denominator, with 0 wherever the mass is 0."""
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        scaling = np.divide(mass, denominator, out=np.zeros_like(mass), where=mass > 0)
    if not np.all(np.isfinite(scaling)) or np.any((scaling == 0) & (mass > 0)):
        hint = "the kernel underflowed between absorptions" if stabilized else "enable `stabilized`"
        raise NumericalInstabilityError(
            f"scaling vectors left the floating-point range at iteration {iteration}; {hint}"
        )
    return scaling


def over_relax(previous: np.ndarray, target: np.ndarray, omega: float) -> np.ndarray:
    """previous^(1 - omega) * target^omega; omega = 1 is the plain Sinkhorn step."""
    if omega == 1.0:
        return target
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        relaxed = np.exp((1.0 - omega) * np.log(previous) + omega * np.log(target))
    return np.where(target > 0, relaxed, 0.0)


def needs_absorption(*scalings: np.ndarray) -> bool:
    for scaling in scalings:
        active = scaling[scaling > 0]
        if np.any(active > ABSORB_THRESHOLD) or np.any(active < 1.0 / ABSORB_THRESHOLD):
            return True
    return False


def absorb(potential: np.ndarray, scaling: np.ndarray, lambda_: float) -> np.ndarray:
    """Fold a scaling vector into its potential (cost units); zero-mass entries go to -inf."""
    with np.errstate(divide="ignore"):
        return potential + np.log(scaling) / lambda_


@dataclass
class SinkhornStage:
    """State left by one run of scaling iterations at a fixed lambda."""

    potentials: Tuple[np.ndarray, ...]
    scalings: Tuple[np.ndarray, ...]
    kernel: np.ndarray
    iterations: int
    residual: float


def run_schedule(
    stage: Callable[..., SinkhornStage], masses: Sequence[np.ndarray], cost_max: float, opts: SolverOptions
) -> Tuple[SinkhornStage, int]:
    """
    Drive `stage(lambda_, potentials, budget, tolerance, absorbing)` to the target lambda.

    Without `opts.stabilized` this is a single plain run from zero potentials.
    Otherwise the lambda_schedule stages run first, each capped at
    WARM_START_ITERATIONS and warm-started from the potentials of the last.
    Returns the final stage and the iteration count summed over all stages.
    """
    stages = lambda_schedule(cost_max, opts.lambda_) if opts.stabilized else [opts.lambda_]
    potentials = tuple(np.zeros_like(mass) for mass in masses)
    used = 0
    for lambda_ in stages[:-1]:
        budget = min(WARM_START_ITERATIONS, opts.max_iterations - used - 1)
        if budget < 1:
            break
        warm = stage(lambda_, potentials, budget, max(opts.tolerance, WARM_START_TOLERANCE), True)
        potentials = tuple(absorb(p, x, lambda_) for p, x in zip(warm.potentials, warm.scalings))
        used += warm.iterations
        LOGGER.debug(f"Warm start at lambda={lambda_:.4g}: {warm.iterations} iterations, residual {warm.residual:.3e}")

    final = stage(opts.lambda_, potentials, opts.max_iterations - used, opts.tolerance, opts.stabilized)
    return final, used + final.iterations


class ResidualTracker:
    """
    Residual history of one stage. Every RELAXATION_START iterations the
    over-relaxation weight is re-estimated and may only grow; a residual
    DIVERGENCE_FACTOR times above the best one seen drops back to plain
    iterations for good.
    """

    def __init__(self):
        self.residuals: List[float] = []
        self.omega = 1.0
        self.best = np.inf
        self.frozen = False

    def record(self, residual: float):
        self.residuals.append(residual)
        self.best = min(self.best, residual)
        if self.frozen:
            return
        if self.omega > 1.0 and residual > DIVERGENCE_FACTOR * self.best:
            LOGGER.debug(f"Over-relaxation diverged after {len(self.residuals)} iterations, back to plain updates")
            self.omega, self.frozen = 1.0, True
        elif len(self.residuals) % RELAXATION_START == 0:
            omega = relaxation_weight(self.residuals, self.omega)
            if omega > self.omega:
                LOGGER.debug(f"Over-relaxation weight {omega:.4f} after {len(self.residuals)} iterations")
                self.omega = omega


def _kernel(cost, lambda_, alpha, beta):
    return np.exp(lambda_ * (alpha[:, None] + beta[None, :] - cost))


def _scaling_stage(cost, r, c, lambda_, potentials, budget, tolerance, absorbing) -> SinkhornStage:
    alpha, beta = potentials
    kernel = _kernel(cost, lambda_, alpha, beta)
    u, v = np.ones_like(r), np.ones_like(c)
    kv = kernel @ v
    tracker = ResidualTracker()
    iteration, residual = 0, np.inf
    while iteration < budget:
        iteration += 1
        u = over_relax(u, scaling_update(r, kv, iteration, absorbing), tracker.omega)
        ktu = kernel.T @ u
        v = over_relax(v, scaling_update(c, ktu, iteration, absorbing), tracker.omega)
        if absorbing and needs_absorption(u, v):
            alpha, beta = absorb(alpha, u, lambda_), absorb(beta, v, lambda_)
            u, v = np.ones_like(r), np.ones_like(c)
            kernel = _kernel(cost, lambda_, alpha, beta)
            ktu = kernel.T @ u
        kv = kernel @ v
        residual = float(np.abs(u * kv - r).sum() + np.abs(v * ktu - c).sum())
        if residual <= tolerance:
            break
        tracker.record(residual)
    return SinkhornStage(
        potentials=(alpha, beta), scalings=(u, v), kernel=kernel, iterations=iteration, residual=residual
    )


def sinkhorn_plan(cost, r, c, opts: Optional[SolverOptions] = None) -> TransportPlan:
    """
    Solve min <P, M> - (1/lambda) H(P) over the transport polytope U(r, c).

    The solution has the scaling form diag(u) exp(-lambda M) diag(v); u and v are
    rescaled alternately until the L1 residual of both marginals is within
    `opts.tolerance` or `opts.max_iterations` is reached. Marginals are read off
    the matrix-vector products the next update needs, so the plan itself is
    formed once at the end.

    With `opts.stabilized` the scalings are folded into log-potentials whenever
    they leave [1/ABSORB_THRESHOLD, ABSORB_THRESHOLD], and the target lambda is
    reached through warm-started stages (see lambda_schedule). Iterations that
    stall for RELAXATION_START steps switch to over-relaxed updates in either mode.

    Args:
        cost: d x d non-negative cost matrix.
        r: Source masses (rows), length d.
        c: Target masses (columns), length d.
        opts: Solver settings; defaults to SolverOptions().

    Returns:
        TransportPlan with entries and convergence diagnostics.

    Raises:
        DimensionMismatchError: If shapes disagree.
        InvalidInputError: If the cost or masses violate their invariants.
        NumericalInstabilityError: If the plain kernel would under- or overflow.
    """
    opts = opts or SolverOptions()
    cost = check_cost(cost, ndim=2)
    d = cost.shape[0]
    r = check_mass_vector(r, d, "r")
    c = check_mass_vector(c, d, "c")

    if d == 1:
        return TransportPlan(entries=np.ones((1, 1)), iterations=0, converged=True, marginal_residual=0.0)

    if not opts.stabilized:
        ensure_stable_scale(cost, opts)
    stage, iterations = run_schedule(partial(_scaling_stage, cost, r, c), (r, c), float(cost.max()), opts)
    u, v = stage.scalings
    entries = u[:, None] * stage.kernel * v[None, :]
    residual = stage.residual
    converged = residual <= opts.tolerance

    if converged:
        LOGGER.debug(f"Sinkhorn converged after {iterations} iterations (residual {residual:.3e}, d={d})")
    else:
        LOGGER.warning(
            f"Sinkhorn did not converge in {iterations} iterations (residual {residual:.3e}, d={d}); "
            "consider raising max_iterations or lowering lambda"
        )
    return TransportPlan(entries=entries, iterations=iterations, converged=converged, marginal_residual=residual)


def sinkhorn_distance(cost, r, c, opts: Optional[SolverOptions] = None) -> float:
    """Transport cost <P, M> of the entropic plan."""
    return transport_cost(sinkhorn_plan(cost, r, c, opts), cost)


def exact_assignment_oracle(cost) -> Tuple[Tuple[int, ...], float]:
    """
    Brute-force the permutation minimizing (1/d) sum_i m[i, sigma(i)].

    Permutations are enumerated in lexicographic order and only a strictly
    smaller value replaces the incumbent, so ties resolve to the
    lexicographically smallest permutation.

    Raises:
        InvalidInputError: If d exceeds ORACLE_MAX_D.
    """
    cost = check_cost(cost, ndim=2)
    d = cost.shape[0]
    if d > ORACLE_MAX_D:
        raise InvalidInputError(f"exact_assignment_oracle enumerates d! permutations and is limited to d <= {ORACLE_MAX_D}, got {d}")

    rows = np.arange(d)
    best_perm: Tuple[int, ...] = tuple(rows.tolist())
    best_value = np.inf
    permutations = itertools.permutations(range(d))
    while batch := list(itertools.islice(permutations, _ORACLE_BATCH)):
        block = np.array(batch)
        totals = cost[rows, block].sum(axis=1) / d
        k = int(np.argmin(totals))
        if totals[k] < best_value:
            best_value = float(totals[k])
            best_perm = tuple(int(x) for x in block[k])
    return best_perm, best_value
