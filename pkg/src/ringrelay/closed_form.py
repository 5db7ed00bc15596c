"""Closed-form long-run performance of the two-walker relay.

Each quantity here is an explicit rational (or rational-in-parameters)
expression: the long-run clockwise speed of the message, the long-run
rate of handoffs (the communication cost), and the long-run fraction of
time the carrier moves clockwise.  The simulators and the exact
finite-state solver must reproduce these numbers by entirely different
routes, which is the package's central consistency check.
"""
from __future__ import annotations

from typing import NamedTuple

from . import errors
from .model import validate_flip_prob, validate_sites


def speed_discrete(n_sites: int, flip_prob: float) -> float:
    """Long-run sites-per-round speed of the message, lattice variant."""
    n = validate_sites(n_sites)
    eps = validate_flip_prob(flip_prob)
    return (1.0 - eps) / (2.0 * (1.0 + eps * (n - 2)))


def cost_discrete(n_sites: int, flip_prob: float) -> float:
    """Long-run handoffs per round, lattice variant."""
    return validate_flip_prob(flip_prob) * speed_discrete(n_sites, flip_prob)


def direction_prob_discrete(n_sites: int, flip_prob: float) -> float:
    """Long-run fraction of rounds the carrier moves clockwise."""
    n = validate_sites(n_sites)
    eps = validate_flip_prob(flip_prob)
    return (3.0 + eps * (2 * n - 5)) / (4.0 * (1.0 + eps * (n - 2)))


def _validate_cont(circumference: float, speed: float, switch_rate: float):
    if not (circumference > 0.0):
        raise errors.NOutOfRange(f"circumference must be > 0, got {circumference!r}")
    if not (speed > 0.0):
        raise errors.SpeedOutOfRange(f"speed must be > 0, got {speed!r}")
    if not (switch_rate > 0.0):
        raise errors.RateOutOfRange(f"switch rate must be > 0, got {switch_rate!r}")


def speed_continuous(circumference: float, speed: float, switch_rate: float) -> float:
    """Long-run message speed (length per unit time), continuum variant."""
    _validate_cont(circumference, speed, switch_rate)
    return speed * speed / (2.0 * speed + switch_rate * circumference)


def cost_continuous(circumference: float, speed: float, switch_rate: float) -> float:
    """Long-run handoffs per unit time, continuum variant."""
    _validate_cont(circumference, speed, switch_rate)
    return switch_rate * speed / (2.0 * speed + switch_rate * circumference)


def direction_prob_continuous(
    circumference: float, speed: float, switch_rate: float
) -> float:
    """Long-run fraction of time the carrier moves clockwise."""
    _validate_cont(circumference, speed, switch_rate)
    rn = switch_rate * circumference
    return (3.0 * speed + rn) / (2.0 * (2.0 * speed + rn))


class Dimensionless(NamedTuple):
    """Speed and cost reduced to functions of the load alpha = r*N/v."""

    speed_factor: float  # message speed divided by walker speed
    cost_factor: float  # handoff rate divided by switch rate


def dimensionless(alpha: float) -> Dimensionless:
    """Both normalised quantities collapse onto 1 / (2 + alpha).

    alpha is the expected number of direction reversals a walker makes
    while covering one full circle.
    """
    if not (alpha > 0.0):
        raise errors.AlphaNonpositive(f"alpha must be > 0, got {alpha!r}")
    value = 1.0 / (2.0 + alpha)
    return Dimensionless(value, value)


class ScalingError(NamedTuple):
    speed_error: float
    cost_error: float


def scaling_limit_error(
    n_sites: int, switch_rate: float, circumference: float, speed: float = 1.0
) -> ScalingError:
    """Relative gap between the lattice formulas and their continuum limit.

    The lattice model with 2 * n_sites * speed * flip_prob equal to
    switch_rate * circumference discretises the continuum model; as
    n_sites grows the lattice speed converges to the continuum speed (in
    circle units) and flip_prob/rate-normalised cost likewise.  Returns
    the relative errors at finite n_sites.  For the canonical comparison
    (speed 1, rate 1, circumference 1) both errors equal
    1 / (6 * n_sites - 4).
    """
    n = validate_sites(n_sites)
    _validate_cont(circumference, speed, switch_rate)
    eps = circumference * switch_rate / (2.0 * n * speed)
    validate_flip_prob(eps)
    s_lattice = speed_discrete(n, eps)
    s_target = speed_continuous(circumference, speed, switch_rate) / speed
    c_lattice = (switch_rate / eps) * cost_discrete(n, eps)
    c_target = cost_continuous(circumference, speed, switch_rate)
    return ScalingError(
        abs(s_lattice - s_target) / s_target,
        abs(c_lattice - c_target) / c_target,
    )
