"""Event-driven simulator for the continuum relay.

Walkers move at constant speed on a circle and reverse direction at the
arrival times of independent Poisson clocks.  Between events everything
is deterministic, so the simulator jumps from event to event: direction
switches, and meetings of oppositely moving pairs, whose times have
closed forms.  When the message holder meets a clockwise mover head-on,
the message changes hands and the excursion bookkeeping (regeneration
cycles) rolls over.

Paths are right-continuous: at a switch time the walker already moves
with its new direction, and at a meeting the handoff has already
happened.  Ties are resolved deterministically: checkpoints before
events, switches before meetings, lower walker indices first.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors
from .estimators import N_BATCHES, RunReport
from .model import (
    ContinuousConfig,
    SeedSpec,
    WalkerStreams,
    as_seed,
    circle_delta,
    validate_continuous,
)


def default_tol(config: ContinuousConfig) -> float:
    """Position coincidence tolerance: snapped meetings keep float noise
    far below this, and genuine gaps sit far above it."""
    return 1e-12 * config.circumference


@dataclass
class ContinuousState:
    positions: np.ndarray  # floats in [0, circumference), shape (m,)
    directions: np.ndarray  # +1 / -1, shape (m,)
    carrier: int
    clock: float = 0.0
    next_switch: np.ndarray | None = None  # absolute times, shape (m,)

    def copy(self) -> "ContinuousState":
        return ContinuousState(
            self.positions.copy(),
            self.directions.copy(),
            self.carrier,
            self.clock,
            None if self.next_switch is None else self.next_switch.copy(),
        )


@dataclass(frozen=True)
class Event:
    time: float
    kind: str  # "switch" | "meeting"
    walkers: tuple[int, ...]


def _check_state(state: ContinuousState, config: ContinuousConfig) -> None:
    m = config.n_walkers
    if len(state.positions) != m or len(state.directions) != m:
        raise errors.RelayError(f"state must describe {m} walkers")
    if np.any(state.positions < 0) or np.any(state.positions >= config.circumference):
        raise errors.NOutOfRange("positions must lie in [0, circumference)")
    if not np.all(np.isin(state.directions, (1, -1))):
        raise errors.RelayError("directions must be +1 or -1")
    if not (0 <= state.carrier < m):
        raise errors.RelayError(f"carrier must be in [0, {m})")


def meeting_time(
    gap: float, d_a: int, d_b: int, config: ContinuousConfig,
    tol: float | None = None,
) -> float | None:
    """Time until two walkers meet, or None if they never do.

    gap is the clockwise distance from walker a to walker b, in
    [0, circumference).  Walkers moving the same way keep their gap
    forever.  Opposite walkers close their gap at twice the speed; a gap
    within tol of 0 or of the full circle means the pair is co-located
    right now (fresh from a meeting), so the next meeting is half a lap
    away, not instantaneous.
    """
    if d_a == d_b:
        return None
    n, v = config.circumference, config.speed
    if not (0.0 <= gap < n):
        raise errors.NOutOfRange(f"gap must lie in [0, circumference), got {gap!r}")
    if tol is None:
        tol = default_tol(config)
    if d_a == 1:  # gap shrinks
        return gap / (2.0 * v) if gap > tol else n / (2.0 * v)
    # gap grows to a full circle
    return (n - gap) / (2.0 * v) if gap < n - tol else n / (2.0 * v)


def next_event(
    state: ContinuousState, config: ContinuousConfig, tol: float | None = None
) -> Event:
    """Earliest pending switch or pairwise meeting after state.clock."""
    if state.next_switch is None:
        raise errors.RelayError("state has no scheduled switch times")
    best: tuple | None = None
    for j in range(config.n_walkers):
        key = (float(state.next_switch[j]), 0, (j,))
        if best is None or key < best:
            best = key
    for j in range(config.n_walkers):
        for k in range(j + 1, config.n_walkers):
            gap = float(
                circle_delta(
                    state.positions[j], state.positions[k], config.circumference
                )
            )
            dt = meeting_time(
                gap, int(state.directions[j]), int(state.directions[k]), config, tol
            )
            if dt is None:
                continue
            key = (state.clock + dt, 1, (j, k))
            if key < best:
                best = key
    return Event(best[0], "switch" if best[1] == 0 else "meeting", best[2])


def advance_to(
    state: ContinuousState, t: float, config: ContinuousConfig
) -> ContinuousState:
    """Deterministic transport of every walker to time t.

    Refuses to move backwards or to fly past a scheduled switch (an
    event strictly inside the interval would be silently lost).
    """
    if t < state.clock:
        raise errors.RelayError(f"cannot advance from {state.clock} back to {t}")
    if state.next_switch is not None and np.any(state.next_switch < t):
        raise errors.EventSkipped(
            f"a switch is scheduled before t={t}; handle it first"
        )
    out = state.copy()
    seg = t - state.clock
    out.positions = (out.positions + config.speed * out.directions * seg) % (
        config.circumference
    )
    out.clock = t
    return out


def _handoff_candidates(
    positions: np.ndarray, directions: np.ndarray, carrier: int,
    circumference: float, tol: float,
) -> np.ndarray:
    gaps = (positions - positions[carrier]) % circumference
    dist = np.minimum(gaps, circumference - gaps)
    return np.nonzero((dist <= tol) & (directions == 1))[0]


def handle_event(
    state: ContinuousState, event: Event, config: ContinuousConfig,
    streams: WalkerStreams, tol: float | None = None,
) -> tuple[ContinuousState, bool]:
    """Apply a switch or meeting at the current clock.

    The state must already have been advanced to event.time.  Returns
    the new state and whether the message changed hands.
    """
    if tol is None:
        tol = default_tol(config)
    if abs(event.time - state.clock) > tol / config.speed:
        raise errors.EventSkipped(
            f"state clock {state.clock} does not match event time {event.time}"
        )
    out = state.copy()
    jumped = False
    if event.kind == "switch":
        (j,) = event.walkers
        out.directions[j] = -out.directions[j]
        out.next_switch[j] = event.time + streams.walker[j].exponential(
            1.0 / config.switch_rate
        )
    elif event.kind == "meeting":
        j, k = event.walkers
        out.positions[k] = out.positions[j]  # snap away float drift
        if out.directions[out.carrier] == -1:
            cands = _handoff_candidates(
                out.positions, out.directions, out.carrier,
                config.circumference, tol,
            )
            if cands.size:
                out.carrier = int(cands[streams.choose(cands.size)])
                jumped = True
    else:
        raise errors.RelayError(f"unknown event kind {event.kind!r}")
    return out, jumped


def sample_contact(config: ContinuousConfig, streams: WalkerStreams) -> ContinuousState:
    """Draw from the regeneration law: both walkers at one uniform point,
    opposite directions, message on the clockwise mover (two walkers
    only).  Switch clocks are left for the simulator to schedule."""
    if config.n_walkers != 2:
        raise errors.MNotTwo("contact start is defined for 2 walkers")
    point = float(streams.aux.random() * config.circumference)
    variant = int(streams.aux.integers(2))
    positions = np.array([point, point])
    if variant == 0:
        return ContinuousState(positions, np.array([1, -1]), 0)
    return ContinuousState(positions, np.array([-1, 1]), 1)


def in_contact_state(state: ContinuousState, config: ContinuousConfig,
                     tol: float | None = None) -> bool:
    if config.n_walkers != 2:
        return False
    if tol is None:
        tol = default_tol(config)
    gap = float(
        circle_delta(state.positions[0], state.positions[1], config.circumference)
    )
    return min(gap, config.circumference - gap) <= tol and (
        state.directions[0] * state.directions[1] == -1
    )


def _initial_state(
    config: ContinuousConfig, streams: WalkerStreams, initial, tol: float
) -> ContinuousState:
    n, m = config.circumference, config.n_walkers
    if isinstance(initial, ContinuousState):
        _check_state(initial, config)
        state = initial.copy()
        state.clock = 0.0
    elif initial == "uniform-random":
        positions = streams.aux.random(m) * n
        directions = (1 - 2 * streams.aux.integers(0, 2, size=m)).astype(np.int64)
        carrier = int(streams.aux.integers(m))
        state = ContinuousState(positions, directions, carrier)
    elif initial in ("regeneration", "regeneration-f"):
        state = sample_contact(config, streams)
    else:
        raise errors.RelayError(f"unknown initial condition {initial!r}")
    if state.directions[state.carrier] == -1:
        cands = _handoff_candidates(
            state.positions, state.directions, state.carrier, n, tol
        )
        if cands.size:  # resolve, uncounted, as for the lattice model
            state.carrier = int(cands[streams.choose(cands.size)])
    if state.next_switch is None:
        state.next_switch = np.array(
            [
                streams.walker[j].exponential(1.0 / config.switch_rate)
                for j in range(m)
            ]
        )
    return state


def simulate_continuous(
    config: ContinuousConfig,
    horizon: float,
    seed: SeedSpec | int,
    initial="uniform-random",
    *,
    sample_every: float | None = None,
    trace_every: float | None = None,
) -> RunReport:
    """Run the continuum relay up to the given time horizon.

    Statistics cover the window after a 1% burn-in, skipped when the
    start is a contact state.  Cycle records are kept for two walkers:
    one entry per contact-to-contact excursion of the carrier.
    """
    validate_continuous(config)
    if not (horizon > 0.0):
        raise errors.RelayError(f"horizon must be > 0, got {horizon!r}")
    spec = as_seed(seed)
    streams = WalkerStreams(spec, config.n_walkers)
    n, v, r, m = (
        config.circumference,
        config.speed,
        config.switch_rate,
        config.n_walkers,
    )
    tol = default_tol(config)
    state = _initial_state(config, streams, initial, tol)
    in_f = in_contact_state(state, config, tol)
    burn = 0.0 if in_f else 0.01 * horizon

    edges = np.linspace(burn, horizon, N_BATCHES + 1)
    sample_ts = (
        burn + sample_every * np.arange(1, int((horizon - burn) / sample_every) + 1)
        if sample_every
        else np.empty(0)
    )
    trace_ts = (
        trace_every * np.arange(1, int(horizon / trace_every) + 1)
        if trace_every
        else np.empty(0)
    )

    x = state.positions.astype(float)
    d = state.directions.astype(np.int64)
    car = state.carrier
    ns = state.next_switch.astype(float)
    clock = 0.0

    cum_disp = 0.0
    cum_clock = 0.0
    cum_jumps = 0
    x_star = np.zeros(m)  # unwrapped displacement of each walker

    edge_disp = np.empty(N_BATCHES + 1)
    edge_jump = np.empty(N_BATCHES + 1)
    edge_clock = np.empty(N_BATCHES + 1)
    ie = 0
    isamp = 0
    itr = 0
    samples_x, samples_d = [], []
    trace_speed, trace_cost = [], []

    cyc_len, cyc_sum, cyc_disp, cyc_jump = [], [], [], []
    anchor = None  # (time, cum_disp, carrier, relative displacement)
    if in_f and m == 2:
        anchor = (0.0, 0.0, car, x_star[car] - x_star[1 - car])

    inf = np.inf
    pairs = [(j, k) for j in range(m) for k in range(j + 1, m)]
    while True:
        t_cp = inf
        if ie <= N_BATCHES:
            t_cp = edges[ie]
        if isamp < len(sample_ts):
            t_cp = min(t_cp, sample_ts[isamp])
        if itr < len(trace_ts):
            t_cp = min(t_cp, trace_ts[itr])

        # earliest internal event: switches first on ties, then pairs
        ev_t, ev_kind, ev_j, ev_k = inf, 0, -1, -1
        for j in range(m):
            if ns[j] < ev_t:
                ev_t, ev_kind, ev_j = ns[j], 0, j
        for j, k in pairs:
            if d[j] == d[k]:
                continue
            gap = (x[k] - x[j]) % n
            if gap >= n:
                gap -= n
            if d[j] == 1:
                dt = gap / (2.0 * v) if gap > tol else n / (2.0 * v)
            else:
                dt = (n - gap) / (2.0 * v) if gap < n - tol else n / (2.0 * v)
            t_meet = clock + dt
            if t_meet < ev_t:
                ev_t, ev_kind, ev_j, ev_k = t_meet, 1, j, k

        t_next = min(t_cp, ev_t)
        seg = t_next - clock
        if seg > 0.0:
            cum_disp += v * d[car] * seg
            if d[car] == 1:
                cum_clock += seg
            x_star += v * d * seg
            x = (x + v * d * seg) % n
            clock = t_next

        if t_cp <= ev_t:
            if ie <= N_BATCHES and edges[ie] == t_cp:
                edge_disp[ie] = cum_disp
                edge_jump[ie] = cum_jumps
                edge_clock[ie] = cum_clock
                ie += 1
            if isamp < len(sample_ts) and sample_ts[isamp] == t_cp:
                samples_x.append(x.copy())
                samples_d.append(d.copy())
                isamp += 1
            if itr < len(trace_ts) and trace_ts[itr] == t_cp:
                trace_speed.append(cum_disp / t_cp)
                trace_cost.append(cum_jumps / t_cp)
                itr += 1
            if t_cp >= horizon:
                break
        elif ev_kind == 0:
            d[ev_j] = -d[ev_j]
            ns[ev_j] = clock + streams.walker[ev_j].exponential(1.0 / r)
        else:
            x[ev_k] = x[ev_j]
            jumped = False
            if d[car] == -1:
                cands = _handoff_candidates(x, d, car, n, tol)
                if cands.size:
                    car = int(cands[streams.choose(cands.size)])
                    jumped = True
                    cum_jumps += 1
            if m == 2:
                # every pair meeting is a contact of the carrier
                if anchor is not None and anchor[0] >= burn:
                    a_t, a_disp, a_car, a_rel = anchor
                    cyc_len.append(clock - a_t)
                    cyc_sum.append(cum_disp - a_disp)
                    cyc_disp.append((x_star[a_car] - x_star[1 - a_car]) - a_rel)
                    cyc_jump.append(jumped)
                anchor = (clock, cum_disp, car, x_star[car] - x_star[1 - car])

    batch_disp = np.diff(edge_disp)
    batch_jump = np.diff(edge_jump)
    batch_clock = np.diff(edge_clock)
    report = RunReport(
        kind="continuous",
        params={
            "model": "continuous",
            "N": n,
            "v": v,
            "r": r,
            "m": m,
            "horizon": horizon,
        },
        total_time=horizon - burn,
        burn_in=burn,
        displacement_sum=cum_disp - edge_disp[0],
        jump_count=int(cum_jumps - edge_jump[0]),
        clockwise_time=cum_clock - edge_clock[0],
        lap_length=n,
        batch_duration=float(edges[1] - edges[0]),
        batch_displacement=batch_disp,
        batch_jumps=batch_jump,
        batch_clockwise=batch_clock,
        cycle_lengths=np.asarray(cyc_len, dtype=float) if m == 2 else None,
        cycle_displacements=np.asarray(cyc_disp, dtype=float) if m == 2 else None,
        cycle_carrier_sums=np.asarray(cyc_sum, dtype=float) if m == 2 else None,
        cycle_jumps=np.asarray(cyc_jump, dtype=bool) if m == 2 else None,
        sample_positions=np.stack(samples_x) if samples_x else None,
        sample_directions=np.stack(samples_d) if samples_d else None,
        trace_times=trace_ts if trace_every else None,
        trace_speed=np.asarray(trace_speed) if trace_every else None,
        trace_cost=np.asarray(trace_cost) if trace_every else None,
        seeds=[[spec.master, spec.replica]],
    )
    return report


def sample_walker_states(
    config: ContinuousConfig, times: np.ndarray, seed: SeedSpec | int
) -> tuple[np.ndarray, np.ndarray]:
    """Positions and directions of the walker motion at given times.

    The message plays no part in where walkers are, so equilibrium
    checks of the walker ensemble can skip the event loop entirely:
    each walker's switch times are drawn in bulk and its piecewise
    linear path evaluated directly.  Streams are consumed exactly as by
    simulate_continuous with the uniform-random start, so on a shared
    seed the two agree pointwise (up to float roundoff in positions).
    """
    validate_continuous(config)
    times = np.asarray(times, dtype=float)
    if times.size == 0 or np.any(times < 0) or np.any(np.diff(times) < 0):
        raise errors.RelayError("times must be nonnegative and sorted")
    n, v, r, m = (
        config.circumference,
        config.speed,
        config.switch_rate,
        config.n_walkers,
    )
    streams = WalkerStreams(as_seed(seed), m)
    x0 = streams.aux.random(m) * n
    d0 = 1 - 2 * streams.aux.integers(0, 2, size=m)
    streams.aux.integers(m)  # the carrier draw; irrelevant here but keeps
    # the auxiliary stream aligned with the simulator's

    positions = np.empty((len(times), m))
    directions = np.empty((len(times), m), dtype=np.int64)
    tmax = float(times[-1])
    for j in range(m):
        blocks = []
        total = 0.0
        while total <= tmax:
            block = streams.walker[j].exponential(1.0 / r, size=512)
            blocks.append(block)
            total += float(block.sum())
        switch_ts = np.cumsum(np.concatenate(blocks))
        bounds = np.concatenate(([0.0], switch_ts))
        signs = np.where(np.arange(len(bounds)) % 2 == 0, d0[j], -d0[j])
        disp = np.concatenate(([0.0], np.cumsum(signs[:-1] * np.diff(bounds))))
        idx = np.searchsorted(switch_ts, times, side="left")
        positions[:, j] = (
            x0[j] + v * (disp[idx] + signs[idx] * (times - bounds[idx]))
        ) % n
        directions[:, j] = signs[idx]
    return positions, directions
