"""Exact finite-state computations for the two-walker relay.

Three independent exact routes live here:

* the reduced chain: the lattice relay seen through the gap between the
  two walkers, their directions, and who carries the message.  Solving
  for its stationary law gives speed and handoff rate by linear algebra
  alone, with no appeal to the closed-form expressions.

* the ladder system: between contacts, the walker gap performs a
  persistent (direction-remembering) walk on half-lap rungs.  The
  probability that an excursion wraps all the way around rather than
  closing is pinned down twice, by solving the linear boundary-value
  recursion and by absorbing-chain linear algebra.

* the continuum generator: a direct implementation of the process
  generator, plus the two harmonic-type functions whose drift
  identities certify the continuum formulas.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import errors
from .model import (
    ContinuousConfig,
    circle_delta,
    validate_continuous,
    validate_flip_prob,
    validate_sites,
)

# ----------------------------------------------------------------------
# Reduced lattice chain: state = (gap, d1, d2, carrier)


@dataclass
class ReducedChain:
    """Transition structure of the gap/direction/carrier chain.

    States are tuples (gap, d1, d2, carrier) with gap = (x1 - x2) mod
    n_sites and carrier in {0, 1}.  The two co-located states in which
    the carrier moves counter-clockwise next to a clockwise partner are
    excluded: a handoff resolves them instantly, so they are never
    observed after an update.
    """

    n_sites: int
    flip_prob: float
    states: list[tuple[int, int, int, int]]
    index: dict[tuple[int, int, int, int], int] = field(repr=False)
    transition: sp.csr_matrix = field(repr=False)
    jump_prob: np.ndarray = field(repr=False)

    @property
    def n_states(self) -> int:
        return len(self.states)


def _excluded(gap: int, d1: int, d2: int, carrier: int) -> bool:
    if gap != 0:
        return False
    if carrier == 0:
        return d1 == -1 and d2 == 1
    return d2 == -1 and d1 == 1


def build_reduced_chain(n_sites: int, flip_prob: float) -> ReducedChain:
    """Enumerate the 8 * n_sites - 2 states and their one-round kernel."""
    n = validate_sites(n_sites)
    eps = validate_flip_prob(flip_prob)

    states = [
        (gap, d1, d2, carrier)
        for gap in range(n)
        for d1 in (1, -1)
        for d2 in (1, -1)
        for carrier in (0, 1)
        if not _excluded(gap, d1, d2, carrier)
    ]
    index = {s: k for k, s in enumerate(states)}

    flip_outcomes = [
        (1, 1, (1 - eps) * (1 - eps)),
        (1, -1, (1 - eps) * eps),
        (-1, 1, eps * (1 - eps)),
        (-1, -1, eps * eps),
    ]

    rows, cols, vals = [], [], []
    jump_prob = np.zeros(len(states))
    for src, (gap, d1, d2, carrier) in enumerate(states):
        new_gap = (gap + d1 - d2) % n
        for s1, s2, prob in flip_outcomes:
            nd1, nd2 = d1 * s1, d2 * s2
            new_carrier = carrier
            if new_gap == 0:
                if carrier == 0 and nd1 == -1 and nd2 == 1:
                    new_carrier = 1
                elif carrier == 1 and nd2 == -1 and nd1 == 1:
                    new_carrier = 0
            if new_carrier != carrier:
                jump_prob[src] += prob
            rows.append(src)
            cols.append(index[(new_gap, nd1, nd2, new_carrier)])
            vals.append(prob)

    transition = sp.coo_matrix(
        (vals, (rows, cols)), shape=(len(states), len(states))
    ).tocsr()
    return ReducedChain(n, eps, states, index, transition, jump_prob)


def stationary(chain: ReducedChain, residual_tol: float = 1e-10) -> np.ndarray:
    """Stationary distribution of the reduced chain.

    Solves (P^T - I) pi = 0 with the last balance equation swapped for
    the normalisation constraint; that system is nonsingular whenever
    the chain is irreducible, which the odd-site validation guarantees.
    """
    n = chain.n_states
    a = (chain.transition.T - sp.identity(n, format="csr")).tolil()
    a[n - 1, :] = np.ones(n)
    rhs = np.zeros(n)
    rhs[n - 1] = 1.0
    pi = spla.splu(a.tocsc()).solve(rhs)

    residual = np.abs(chain.transition.T @ pi - pi).max()
    if residual > residual_tol or pi.min() < -1e-12:
        raise errors.SolverSingular(
            f"stationary solve failed: residual {residual:.3e}, min {pi.min():.3e}"
        )
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


@dataclass(frozen=True)
class ExactMetrics:
    speed: float
    cost: float
    residual: float
    n_states: int


def exact_metrics(n_sites: int, flip_prob: float) -> ExactMetrics:
    """Speed and handoff rate from the stationary law, one solve."""
    chain = build_reduced_chain(n_sites, flip_prob)
    pi = stationary(chain)
    carrier_dir = np.array(
        [d1 if carrier == 0 else d2 for (_, d1, d2, carrier) in chain.states],
        dtype=float,
    )
    speed = float(pi @ carrier_dir)
    cost = float(pi @ chain.jump_prob)
    residual = float(np.abs(chain.transition.T @ pi - pi).max())
    return ExactMetrics(speed, cost, residual, chain.n_states)


def exact_speed(n_sites: int, flip_prob: float) -> float:
    """Stationary mean of the carrier's direction (sites per round)."""
    return exact_metrics(n_sites, flip_prob).speed


def exact_cost(n_sites: int, flip_prob: float) -> float:
    """Stationary one-round handoff probability (handoffs per round)."""
    return exact_metrics(n_sites, flip_prob).cost


# ----------------------------------------------------------------------
# Gap excursions: ladder recursion and absorbing-chain oracle


@dataclass(frozen=True)
class TraceSolution:
    """Solution of the excursion boundary-value recursion.

    f[k] (k = 0..n_sites-1) is the wrap probability from rung k with the
    gap widening; g holds the narrowing-pattern values for k = -1 ..
    n_sites-2, stored with offset 1 (g_at(-1) is the formal value that
    closes the recursion at the lower boundary).  crossing_prob is the
    wrap probability of a fresh excursion, f[0]; the difference f - g is
    constant and equals it.
    """

    n_sites: int
    flip_prob: float
    crossing_prob: float
    f: np.ndarray
    g: np.ndarray

    def f_at(self, k: int) -> float:
        return float(self.f[k])

    def g_at(self, k: int) -> float:
        return float(self.g[k + 1])


def solve_trace_bvp(n_sites: int, flip_prob: float) -> TraceSolution:
    """Solve the excursion recursion as one dense linear system.

    Unknowns are f(0..N-1) and g(-1..N-2).  Interior equations:

        f(k)   = (1 - eps) f(k+1) + eps g(k)        k = 0 .. N-2
        g(k+1) = (1 - eps) g(k)   + eps f(k+1)      k = -1 .. N-3

    with boundaries g(0) = 0 (a narrowing gap one rung up closes) and
    f(N-1) = 1 (a widening gap one rung short of a full lap wraps).
    """
    n = validate_sites(n_sites)
    eps = validate_flip_prob(flip_prob)

    size = 2 * n  # f block at 0..n-1, g block at n..2n-1 with offset 1
    fi = lambda k: k
    gi = lambda k: n + k + 1
    a = np.zeros((size, size))
    b = np.zeros(size)
    row = 0
    for k in range(n - 1):
        a[row, fi(k)] = 1.0
        a[row, fi(k + 1)] = -(1.0 - eps)
        a[row, gi(k)] = -eps
        row += 1
    for k in range(-1, n - 2):
        a[row, gi(k + 1)] = 1.0
        a[row, gi(k)] = -(1.0 - eps)
        a[row, fi(k + 1)] = -eps
        row += 1
    a[row, gi(0)] = 1.0
    row += 1
    a[row, fi(n - 1)] = 1.0
    b[row] = 1.0

    solution = np.linalg.solve(a, b)
    f = solution[:n].copy()
    g = solution[n:].copy()
    return TraceSolution(n, eps, float(f[0]), f, g)


def bvp_residual(sol: TraceSolution) -> float:
    """Largest violation of the recursion and boundary conditions."""
    n, eps = sol.n_sites, sol.flip_prob
    worst = max(abs(sol.g_at(0)), abs(sol.f_at(n - 1) - 1.0))
    for k in range(n - 1):
        worst = max(
            worst, abs(sol.f_at(k) - (1 - eps) * sol.f_at(k + 1) - eps * sol.g_at(k))
        )
    for k in range(-1, n - 2):
        worst = max(
            worst,
            abs(sol.g_at(k + 1) - (1 - eps) * sol.g_at(k) - eps * sol.f_at(k + 1)),
        )
    return worst


def hitting_prob_oracle(n_sites: int, flip_prob: float) -> float:
    """Wrap probability of a gap excursion, by absorbing-chain algebra.

    Builds the rung walk directly: from a widening rung the gap moves up
    one rung and the pattern then persists with probability 1 - eps or
    reverses with probability eps (narrowing rungs mirror this downward);
    rung 0 and rung n_sites absorb.  Solving (I - Q) h = b for the start
    state gives the wrap probability with no reference to the recursion
    solved by solve_trace_bvp.
    """
    n = validate_sites(n_sites)
    eps = validate_flip_prob(flip_prob)

    # Transient states: (k, widening) for k = 0..n-1, (k, narrowing) for
    # k = 1..n-1.  (0, narrowing) cannot occur: rung 0 is a contact.
    idx = {}
    for k in range(n):
        idx[(k, +1)] = len(idx)
    for k in range(1, n):
        idx[(k, -1)] = len(idx)
    size = len(idx)
    q = np.zeros((size, size))
    b = np.zeros(size)

    def add(src, rung, pattern, prob):
        if rung == n:
            b[src] += prob  # absorbed: wrapped
        elif rung == 0:
            pass  # absorbed: excursion closed
        else:
            q[src, idx[(rung, pattern)]] += prob

    for (k, pattern), src in idx.items():
        arrival = k + pattern
        add(src, arrival, pattern, 1.0 - eps)
        add(src, arrival, -pattern, eps)

    h = np.linalg.solve(np.eye(size) - q, b)
    return float(h[idx[(0, +1)]])


# ----------------------------------------------------------------------
# Continuum pair state, harmonic-type functions, generator


@dataclass(frozen=True)
class Phi2State:
    """Two-walker continuum state seen relative to walker 1.

    gap is the clockwise distance from walker 2 to walker 1, i.e.
    (x1 - x2) mod circumference, in [0, circumference).  carrier is 0 or
    1.  Contact states (gap 0 with opposite directions) are represented
    post-handoff, so the carrier there moves clockwise.
    """

    gap: float
    d1: int
    d2: int
    carrier: int


def in_contact_set(state: Phi2State) -> bool:
    return state.gap == 0.0 and state.d1 * state.d2 == -1


def _check_phi2(state: Phi2State, config: ContinuousConfig) -> None:
    validate_continuous(config)
    if not (0.0 <= state.gap < config.circumference):
        raise errors.NOutOfRange(
            f"gap must lie in [0, circumference), got {state.gap!r}"
        )
    if state.d1 not in (1, -1) or state.d2 not in (1, -1):
        raise errors.RelayError("directions must be +1 or -1")
    if state.carrier not in (0, 1):
        raise errors.RelayError("carrier must be 0 or 1")


def H_value(state: Phi2State, config: ContinuousConfig) -> float:
    """Expected-contact-time potential: its generator drift is -1.

    On the contact set the value is pinned to -circumference / (2 *
    speed); elsewhere it is a quadratic in the gap plus direction terms.
    H(state) + t grows at unit rate in expectation until the next
    contact, which is what makes mean excursion lengths computable by
    optional stopping.
    """
    _check_phi2(state, config)
    if in_contact_set(state):
        return -config.circumference / (2.0 * config.speed)
    return _h_formula(state.gap, state.d1, state.d2, config)


def _h_formula(gap: float, d1: int, d2: int, config: ContinuousConfig) -> float:
    n, v, r = config.circumference, config.speed, config.switch_rate
    return (
        (n - 2.0 * gap) / (4.0 * v) * (d1 - d2)
        + (1.0 + d1 * d2) / (4.0 * r)
        + r * gap * (n - gap) / (2.0 * v * v)
    )


def V_value(state: Phi2State, config: ContinuousConfig) -> float:
    """Wrap probability of the running excursion: generator drift 0.

    Measured relative to the carrier: the value is the probability that
    the carrier completes a net full lap around its partner before their
    next contact.  Undefined on the contact set itself (the excursion
    there has just ended), hence StateInF.
    """
    _check_phi2(state, config)
    if in_contact_set(state):
        raise errors.StateInF("wrap probability is undefined at a contact")
    n, v, r = config.circumference, config.speed, config.switch_rate
    if state.carrier == 0:
        gap_c, dd = state.gap, state.d1 - state.d2
    else:
        gap_c = (n - state.gap) if state.gap > 0.0 else 0.0
        dd = state.d2 - state.d1
    return (r * gap_c + v * (1.0 + dd / 2.0)) / (r * n + 2.0 * v)


def h_gradient(state: Phi2State, config: ContinuousConfig) -> np.ndarray:
    """(dH/dx1, dH/dx2) away from the contact set."""
    n, v, r = config.circumference, config.speed, config.switch_rate
    dh_dgap = -(state.d1 - state.d2) / (2.0 * v) + r * (n - 2.0 * state.gap) / (
        2.0 * v * v
    )
    return np.array([dh_dgap, -dh_dgap])


def v_gradient(state: Phi2State, config: ContinuousConfig) -> np.ndarray:
    """(dV/dx1, dV/dx2) away from the contact set."""
    n, v, r = config.circumference, config.speed, config.switch_rate
    slope = r / (r * n + 2.0 * v)
    if state.carrier == 0:
        return np.array([slope, -slope])
    return np.array([-slope, slope])


def apply_generator(
    func: Callable[[np.ndarray, np.ndarray, int], float],
    positions: Sequence[float],
    directions: Sequence[int],
    carrier: int,
    config: ContinuousConfig,
    partials: Callable[[np.ndarray, np.ndarray, int], np.ndarray] | None = None,
    fd_step: float | None = None,
) -> float:
    """Generator of the continuum relay applied to a state function.

    func(positions, directions, carrier) must be smooth in positions
    (circle-periodic) at the given state.  The transport part uses the
    supplied partials when given, otherwise central finite differences
    with step fd_step (default 1e-6 * circumference).  The switching
    part sums r * (func with walker j's direction reversed - func).
    The carrier is held fixed: handoffs occur only on the contact set,
    which has measure zero and is excluded by the harmonic identities.
    """
    validate_continuous(config)
    x = np.asarray(positions, dtype=float) % config.circumference
    d = np.asarray(directions, dtype=int)
    v, r = config.speed, config.switch_rate

    if partials is not None:
        grad = np.asarray(partials(x, d, carrier), dtype=float)
    else:
        h = fd_step if fd_step is not None else 1e-6 * config.circumference
        grad = np.empty(len(x))
        for j in range(len(x)):
            up, down = x.copy(), x.copy()
            up[j] = (up[j] + h) % config.circumference
            down[j] = (down[j] - h) % config.circumference
            grad[j] = (func(up, d, carrier) - func(down, d, carrier)) / (2.0 * h)

    drift = float(np.sum(v * d * grad))
    base = func(x, d, carrier)
    switch = 0.0
    for j in range(len(x)):
        flipped = d.copy()
        flipped[j] = -flipped[j]
        switch += func(x, flipped, carrier) - base
    return drift + r * switch


def pair_state(
    positions: Sequence[float], directions: Sequence[int], carrier: int,
    config: ContinuousConfig,
) -> Phi2State:
    """Fold a full two-walker state into its relative description."""
    if len(positions) != 2:
        raise errors.MNotTwo("relative description needs exactly 2 walkers")
    gap = float(circle_delta(positions[1], positions[0], config.circumference))
    return Phi2State(gap, int(directions[0]), int(directions[1]), carrier)


def h_field(config: ContinuousConfig):
    """(func, partials) pair exposing H as a full-state function."""

    def func(x, d, i):
        return H_value(pair_state(x, d, i, config), config)

    def partials(x, d, i):
        return h_gradient(pair_state(x, d, i, config), config)

    return func, partials


def v_field(config: ContinuousConfig):
    """(func, partials) pair exposing V as a full-state function."""

    def func(x, d, i):
        return V_value(pair_state(x, d, i, config), config)

    def partials(x, d, i):
        return v_gradient(pair_state(x, d, i, config), config)

    return func, partials
