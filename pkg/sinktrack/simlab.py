"""
Seeded generators for the simulation protocols: constant velocity, random walk,
and constant velocity with measurement noise.

Every generator draws from a PCG64 stream seeded with the scenario seed, so a
scenario reproduces bit-identical frames. Replicate r of a run uses
`replicate_seed(base_seed, r)`.
"""

import numpy as np

from .entities import FrameSequence, NoiseModel, PointSet, SimKind, SimScenario

RNG_ALGORITHM = "PCG64"


def replicate_seed(base_seed: int, replicate: int) -> int:
    """
    Child seed for one replicate.

    The child is the first 64-bit word of SeedSequence(base_seed, spawn_key=(replicate,)),
    shifted right by one bit so it fits a signed 64-bit CSV column.
    """
    sequence = np.random.SeedSequence(base_seed, spawn_key=(replicate,))
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def make_rng(seed: int) -> np.random.Generator:
    """Generator used by every simulation."""
    return np.random.Generator(np.random.PCG64(seed))


def _to_sequence(positions: np.ndarray) -> FrameSequence:
    return FrameSequence(frames=[PointSet(positions=frame, frame_index=t) for t, frame in enumerate(positions)])


def _constant_velocity_positions(rng: np.random.Generator, n: int, m: float, steps: int) -> np.ndarray:
    initial = rng.standard_normal((n, 2))
    # per-axis clamp: negative speeds become rest along that axis
    velocity = np.maximum(m * rng.standard_normal((n, 2)), 0.0)
    times = np.arange(steps, dtype=float)[:, None, None]
    return initial[None, :, :] + times * velocity[None, :, :]


def gen_constant_velocity(n: int, m: float, steps: int = 3, seed: int = 0) -> FrameSequence:
    """
    Objects moving at constant velocity without noise.

    Initial x and y are standard normal; per-axis speed is m times a standard
    normal draw, clamped at 0.

    Raises:
        pydantic.ValidationError: If a parameter is out of range.
    """
    scenario = SimScenario(kind=SimKind.CONSTANT_VELOCITY, n=n, m=m, steps=steps, seed=seed)
    rng = make_rng(scenario.seed)
    return _to_sequence(_constant_velocity_positions(rng, scenario.n, scenario.m, scenario.steps))


def gen_random_walk(n: int, sigma2: float, steps: int = 3, seed: int = 0) -> FrameSequence:
    """
    Random-walking objects: standard normal start, N(0, sigma2 I) displacement per step.

    Raises:
        pydantic.ValidationError: If a parameter is out of range.
    """
    scenario = SimScenario(kind=SimKind.RANDOM_WALK, n=n, sigma2=sigma2, steps=steps, seed=seed)
    rng = make_rng(scenario.seed)
    initial = rng.standard_normal((scenario.n, 2))
    steps_taken = rng.normal(0.0, np.sqrt(scenario.sigma2), size=(scenario.steps - 1, scenario.n, 2))
    offsets = np.concatenate([np.zeros((1, scenario.n, 2)), np.cumsum(steps_taken, axis=0)])
    return _to_sequence(initial[None, :, :] + offsets)


def gen_constant_velocity_noisy(
    n: int,
    m: float,
    sigma2: float,
    steps: int = 3,
    seed: int = 0,
    noise_model: NoiseModel = NoiseModel.POSITIONAL,
) -> FrameSequence:
    """
    Constant-velocity objects observed with N(0, sigma2 I) noise at every frame after the first.

    With the positional model each frame gets its own noise draw on top of the
    noiseless trajectory; with the accumulated model the draws add up along the
    sequence. The noiseless part is drawn first, so sigma2 = 0 reproduces
    gen_constant_velocity for the same seed.

    Raises:
        pydantic.ValidationError: If a parameter is out of range.
    """
    scenario = SimScenario(
        kind=SimKind.CONSTANT_VELOCITY_NOISY,
        n=n,
        m=m,
        sigma2=sigma2,
        steps=steps,
        seed=seed,
        noise_model=noise_model,
    )
    rng = make_rng(scenario.seed)
    positions = _constant_velocity_positions(rng, scenario.n, scenario.m, scenario.steps)
    noise = rng.normal(0.0, np.sqrt(scenario.sigma2), size=(scenario.steps - 1, scenario.n, 2))
    if scenario.noise_model is NoiseModel.ACCUMULATED:
        noise = np.cumsum(noise, axis=0)
    positions[1:] += noise
    return _to_sequence(positions)


def generate(scenario: SimScenario) -> FrameSequence:
    """Generate the frames of a scenario."""
    if scenario.kind is SimKind.CONSTANT_VELOCITY:
        return gen_constant_velocity(scenario.n, scenario.m, scenario.steps, scenario.seed)
    if scenario.kind is SimKind.RANDOM_WALK:
        return gen_random_walk(scenario.n, scenario.sigma2, scenario.steps, scenario.seed)
    return gen_constant_velocity_noisy(
        scenario.n, scenario.m, scenario.sigma2, scenario.steps, scenario.seed, scenario.noise_model
    )
