"""
Three-marginal entropic transport over a d x d x d cost tensor and the
compressions that reduce the 3-way plan to pairwise association matrices.
"""

import itertools
import logging
from functools import partial
from typing import Optional, Tuple, Union

import numpy as np

from .entities import SolverOptions, TransportTensor3
from .errors import DimensionMismatchError, InvalidInputError
from .ot_core import (
    ResidualTracker,
    SinkhornStage,
    absorb,
    check_cost,
    check_mass_vector,
    ensure_stable_scale,
    needs_absorption,
    over_relax,
    run_schedule,
    scaling_update,
)

LOGGER = logging.getLogger(__name__)

MAX_TENSOR_D = 512
TRIPLE_ORACLE_MAX_D = 6

TensorLike = Union[TransportTensor3, np.ndarray]


def _entries(plan: TensorLike) -> np.ndarray:
    entries = plan.entries if isinstance(plan, TransportTensor3) else np.asarray(plan, dtype=float)
    if entries.ndim != 3 or len(set(entries.shape)) != 1:
        raise DimensionMismatchError(f"expected a d x d x d plan, got shape {entries.shape}")
    return entries


def tensor_marginals(plan: TensorLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Axis-0, axis-1 and axis-2 marginals of a 3-way plan."""
    entries = _entries(plan)
    return entries.sum(axis=(1, 2)), entries.sum(axis=(0, 2)), entries.sum(axis=(0, 1))


def tensor_marginal_residual(plan: TensorLike, r, c, s) -> float:
    """Summed L1 residual of the three axis-marginals against their targets."""
    return float(sum(np.abs(got - want).sum() for got, want in zip(tensor_marginals(plan), (r, c, s))))


def _kernel(cost, lambda_, f, g, h):
    d = cost.shape[0]
    return np.exp(lambda_ * (f[:, None, None] + g[None, :, None] + h[None, None, :] - cost)).reshape(d, d * d)


def _scaling_stage(cost, r, c, s, lambda_, potentials, budget, tolerance, absorbing) -> SinkhornStage:
    # The kernel is held as a d x d^2 matrix so each projection is one matrix-vector product.
    d = cost.shape[0]
    f, g, h = potentials
    kernel = _kernel(cost, lambda_, f, g, h)
    u, v, w = np.ones_like(r), np.ones_like(c), np.ones_like(s)
    kvw = kernel @ np.outer(v, w).ravel()
    tracker = ResidualTracker()
    iteration, residual = 0, np.inf
    while iteration < budget:
        iteration += 1
        u = over_relax(u, scaling_update(r, kvw, iteration, absorbing), tracker.omega)
        pair = (u @ kernel).reshape(d, d)
        v = over_relax(v, scaling_update(c, pair @ w, iteration, absorbing), tracker.omega)
        w = over_relax(w, scaling_update(s, pair.T @ v, iteration, absorbing), tracker.omega)
        if absorbing and needs_absorption(u, v, w):
            f, g, h = absorb(f, u, lambda_), absorb(g, v, lambda_), absorb(h, w, lambda_)
            u, v, w = np.ones_like(r), np.ones_like(c), np.ones_like(s)
            kernel = _kernel(cost, lambda_, f, g, h)
            pair = kernel.sum(axis=0).reshape(d, d)
        kvw = kernel @ np.outer(v, w).ravel()
        residual = float(
            np.abs(u * kvw - r).sum() + np.abs(v * (pair @ w) - c).sum() + np.abs(w * (pair.T @ v) - s).sum()
        )
        if residual <= tolerance:
            break
        tracker.record(residual)
    return SinkhornStage(
        potentials=(f, g, h), scalings=(u, v, w), kernel=kernel, iterations=iteration, residual=residual
    )


def sinkhorn3_plan(cost, r, c, s, opts: Optional[SolverOptions] = None) -> TransportTensor3:
    """
    Solve min <P, M> - (1/lambda) H(P) over the 3-marginal transport polytope.

    The optimum has entries u_i v_j w_k exp(-lambda m_ijk). One iteration is a
    full cycle of axis-0, axis-1 and axis-2 marginal projections; iteration
    stops when the summed L1 residual of the three marginals is within
    `opts.tolerance` or `opts.max_iterations` is reached. Stabilization, warm
    starts and over-relaxation work as in ot_core.sinkhorn_plan.

    Raises:
        DimensionMismatchError: If shapes disagree.
        InvalidInputError: If inputs violate their invariants or d exceeds MAX_TENSOR_D.
        NumericalInstabilityError: If the plain kernel would under- or overflow.
    """
    opts = opts or SolverOptions()
    cost = check_cost(cost, ndim=3)
    d = cost.shape[0]
    if d > MAX_TENSOR_D:
        raise InvalidInputError(f"the dense d^3 kernel is limited to d <= {MAX_TENSOR_D}, got {d}")
    r = check_mass_vector(r, d, "r")
    c = check_mass_vector(c, d, "c")
    s = check_mass_vector(s, d, "s")

    if not opts.stabilized:
        ensure_stable_scale(cost, opts)
    stage, iterations = run_schedule(partial(_scaling_stage, cost, r, c, s), (r, c, s), float(cost.max()), opts)
    u, v, w = stage.scalings
    entries = (u[:, None] * stage.kernel * np.outer(v, w).ravel()[None, :]).reshape(d, d, d)
    residual = stage.residual
    converged = residual <= opts.tolerance

    if converged:
        LOGGER.debug(f"3-marginal Sinkhorn converged after {iterations} iterations (residual {residual:.3e}, d={d})")
    else:
        LOGGER.warning(
            f"3-marginal Sinkhorn did not converge in {iterations} iterations (residual {residual:.3e}, d={d})"
        )
    return TransportTensor3(entries=entries, iterations=iterations, converged=converged, marginal_residual=residual)


def sinkhorn3_distance(cost, r, c, s, opts: Optional[SolverOptions] = None) -> float:
    """Transport cost <P, M> of the entropic 3-way plan."""
    plan = sinkhorn3_plan(cost, r, c, s, opts)
    return float(np.sum(plan.entries * np.asarray(cost, dtype=float)))


def compress_ij(plan: TensorLike) -> np.ndarray:
    """p'_ij = sum_k p_ijk: the t -> t+1 association."""
    return _entries(plan).sum(axis=2)


def compress_ik(plan: TensorLike) -> np.ndarray:
    """p'_ik = sum_j p_ijk: the t -> t+2 association."""
    return _entries(plan).sum(axis=1)


def compress_jk(plan: TensorLike) -> np.ndarray:
    """p'_jk = sum_i p_ijk: the t+1 -> t+2 association."""
    return _entries(plan).sum(axis=0)


def exact_triple_oracle(cost) -> Tuple[Tuple[Tuple[int, ...], Tuple[int, ...]], float]:
    """
    Brute-force the permutation pair (sigma: i -> j, tau: j -> k) minimizing
    (1/d) sum_i m[i, sigma(i), tau(sigma(i))].

    Pairs are visited in lexicographic order (sigma first, then tau) and only a
    strictly smaller value replaces the incumbent.

    Raises:
        InvalidInputError: If d exceeds TRIPLE_ORACLE_MAX_D.
    """
    cost = check_cost(cost, ndim=3)
    d = cost.shape[0]
    if d > TRIPLE_ORACLE_MAX_D:
        raise InvalidInputError(f"exact_triple_oracle is limited to d <= {TRIPLE_ORACLE_MAX_D}, got {d}")

    perms = np.array(list(itertools.permutations(range(d))))
    rows = np.arange(d)
    best = (tuple(rows.tolist()), tuple(rows.tolist()))
    best_value = np.inf
    for sigma in perms:
        totals = cost[rows, sigma, perms[:, sigma]].sum(axis=1) / d
        k = int(np.argmin(totals))
        if totals[k] < best_value:
            best_value = float(totals[k])
            best = (tuple(int(x) for x in sigma), tuple(int(x) for x in perms[k]))
    return best, best_value
