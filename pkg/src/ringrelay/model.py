"""Shared model vocabulary: parameter sets, directions, geometry, seeding.

Two variants of the same relay mechanism are covered.  In the lattice
variant, walkers sit on the integers modulo an odd number of sites and
update in synchronous rounds; in the continuum variant they move at a
fixed speed on a circle of arbitrary positive length and reverse at the
arrivals of independent Poisson clocks.  Exactly one walker carries a
message at any time, and the message is handed off on contact from a
counter-clockwise mover to a clockwise mover, so the message itself only
ever travels clockwise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors

CLOCKWISE = 1
COUNTER_CLOCKWISE = -1
DIRECTIONS = (CLOCKWISE, COUNTER_CLOCKWISE)


@dataclass(frozen=True)
class DiscreteConfig:
    """Lattice variant parameters.

    n_sites: number of ring sites, odd and >= 3.
    flip_prob: probability a walker reverses direction in a round.
    n_walkers: number of walkers, >= 2.
    """

    n_sites: int
    flip_prob: float
    n_walkers: int = 2


@dataclass(frozen=True)
class ContinuousConfig:
    """Continuum variant parameters.

    circumference: circle length, > 0.
    speed: walker speed, > 0.
    switch_rate: Poisson rate of direction reversals, > 0.
    n_walkers: number of walkers, >= 2.
    """

    circumference: float
    speed: float = 1.0
    switch_rate: float = 1.0
    n_walkers: int = 2


def validate_sites(n_sites: int) -> int:
    if not isinstance(n_sites, (int, np.integer)):
        raise errors.NOutOfRange(f"site count must be an integer, got {n_sites!r}")
    if n_sites < 3:
        raise errors.NOutOfRange(f"need at least 3 sites, got {n_sites}")
    if n_sites % 2 == 0:
        raise errors.EvenN(f"site count must be odd, got {n_sites}")
    return int(n_sites)


def validate_flip_prob(flip_prob: float) -> float:
    # Both endpoints are excluded: at 0 the walkers never turn, at 1 the
    # relative motion is periodic, and either way ergodicity is lost.
    if not (0.0 < flip_prob < 1.0):
        raise errors.EpsilonOutOfRange(
            f"flip probability must lie in (0, 1), got {flip_prob!r}"
        )
    return float(flip_prob)


def validate_discrete(config: DiscreteConfig) -> DiscreteConfig:
    """Check a lattice parameter set, returning it unchanged."""
    validate_sites(config.n_sites)
    validate_flip_prob(config.flip_prob)
    if config.n_walkers < 2:
        raise errors.MTooSmall(f"need at least 2 walkers, got {config.n_walkers}")
    return config


def validate_continuous(config: ContinuousConfig) -> ContinuousConfig:
    """Check a continuum parameter set, returning it unchanged."""
    if not (config.circumference > 0.0):
        raise errors.NOutOfRange(
            f"circumference must be > 0, got {config.circumference!r}"
        )
    if not (config.speed > 0.0):
        raise errors.SpeedOutOfRange(f"speed must be > 0, got {config.speed!r}")
    if not (config.switch_rate > 0.0):
        raise errors.RateOutOfRange(
            f"switch rate must be > 0, got {config.switch_rate!r}"
        )
    if config.n_walkers < 2:
        raise errors.MTooSmall(f"need at least 2 walkers, got {config.n_walkers}")
    return config


def circle_delta(x_from, x_to, circumference):
    """Clockwise gap from x_from to x_to, in [0, circumference).

    Works for scalars and numpy arrays, integer or float.  The float
    modulo can land exactly on the circumference when the raw difference
    is a tiny negative number, so that edge is folded back to 0.
    """
    d = (x_to - x_from) % circumference
    if np.isscalar(d) or d.ndim == 0:
        return d - circumference if d >= circumference else d
    d = np.asarray(d)
    return np.where(d >= circumference, d - circumference, d)


@dataclass(frozen=True)
class SeedSpec:
    """Deterministic seed derivation for one replica of one experiment.

    The same (master, replica) pair always yields the same substreams,
    and distinct replicas get statistically independent ones.
    """

    master: int
    replica: int = 0

    def child(self, index: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.master, spawn_key=(self.replica, index))


class WalkerStreams:
    """One random stream per walker plus an auxiliary stream.

    Walker j's stream drives only walker j's direction randomness, so a
    trajectory consumes each stream identically whether steps are drawn
    one at a time or in vectorised blocks.  The auxiliary stream handles
    initial-state draws and the rare uniform choice among several
    simultaneous handoff candidates; keeping it separate means those
    choices never perturb the walkers' own randomness.
    """

    def __init__(self, seed: SeedSpec, n_walkers: int):
        self.seed = seed
        self.n_walkers = n_walkers
        self.aux = np.random.Generator(np.random.PCG64(seed.child(0)))
        self.walker = [
            np.random.Generator(np.random.PCG64(seed.child(1 + j)))
            for j in range(n_walkers)
        ]

    def choose(self, n: int) -> int:
        """Uniform index in range(n) from the auxiliary stream."""
        if n == 1:
            return 0
        return int(self.aux.integers(n))


def as_seed(seed) -> SeedSpec:
    if isinstance(seed, SeedSpec):
        return seed
    return SeedSpec(int(seed))
