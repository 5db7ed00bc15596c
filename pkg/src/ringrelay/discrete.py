"""Round-based simulator for the lattice relay.

One round, in order: every walker moves one site in its current
direction; every walker independently reverses direction with the flip
probability; if the message holder now moves counter-clockwise while
sharing its site with a clockwise mover, the message jumps to one such
mover (chosen uniformly if there are several).  The message therefore
only ever crosses sites clockwise.

step() applies one round and is the reference implementation.  For two
walkers simulate_discrete runs a vectorised engine that draws each
walker's flips in blocks from that walker's own stream, which consumes
randomness identically to repeated step() calls and is checked against
them in the tests.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors
from .estimators import N_BATCHES, RunReport
from .model import (
    DiscreteConfig,
    SeedSpec,
    WalkerStreams,
    as_seed,
    validate_discrete,
)

_BLOCK = 1 << 20


@dataclass
class DiscreteState:
    positions: np.ndarray  # site indices, shape (m,)
    directions: np.ndarray  # +1 / -1, shape (m,)
    carrier: int  # walker index holding the message
    t: int = 0

    def copy(self) -> "DiscreteState":
        return DiscreteState(
            self.positions.copy(), self.directions.copy(), self.carrier, self.t
        )


def _check_state(state: DiscreteState, config: DiscreteConfig) -> None:
    m = config.n_walkers
    if len(state.positions) != m or len(state.directions) != m:
        raise errors.RelayError(f"state must describe {m} walkers")
    if np.any(state.positions < 0) or np.any(state.positions >= config.n_sites):
        raise errors.NOutOfRange("positions must be sites in [0, n_sites)")
    if not np.all(np.isin(state.directions, (1, -1))):
        raise errors.RelayError("directions must be +1 or -1")
    if not (0 <= state.carrier < m):
        raise errors.RelayError(f"carrier must be in [0, {m})")


def _resolve_handoff(
    positions: np.ndarray, directions: np.ndarray, carrier: int,
    streams: WalkerStreams,
) -> tuple[int, bool]:
    if directions[carrier] != -1:
        return carrier, False
    candidates = np.nonzero(
        (positions == positions[carrier]) & (directions == 1)
    )[0]
    if candidates.size == 0:
        return carrier, False
    return int(candidates[streams.choose(candidates.size)]), True


def step(
    state: DiscreteState, config: DiscreteConfig, streams: WalkerStreams
) -> tuple[DiscreteState, bool]:
    """One synchronous round; returns the new state and whether the
    message changed hands."""
    m = config.n_walkers
    positions = (state.positions + state.directions) % config.n_sites
    signs = np.empty(m, dtype=np.int64)
    for j in range(m):
        signs[j] = -1 if streams.walker[j].random() < config.flip_prob else 1
    directions = state.directions * signs
    carrier, jumped = _resolve_handoff(positions, directions, state.carrier, streams)
    return DiscreteState(positions, directions, carrier, state.t + 1), jumped


def sample_nu(config: DiscreteConfig, streams: WalkerStreams) -> DiscreteState:
    """Draw from the regeneration law: both walkers on one uniform site,
    opposite directions, message on the clockwise mover (two walkers
    only)."""
    if config.n_walkers != 2:
        raise errors.MNotTwo("regeneration start is defined for 2 walkers")
    site = int(streams.aux.integers(config.n_sites))
    variant = int(streams.aux.integers(2))
    positions = np.array([site, site], dtype=np.int64)
    if variant == 0:
        return DiscreteState(positions, np.array([1, -1], dtype=np.int64), 0)
    return DiscreteState(positions, np.array([-1, 1], dtype=np.int64), 1)


def in_regeneration_set(state: DiscreteState, config: DiscreteConfig) -> bool:
    """Contact states: both walkers co-located with opposite directions
    (after handoff resolution the carrier is the clockwise mover)."""
    if config.n_walkers != 2:
        return False
    return (
        int(state.positions[0]) % config.n_sites
        == int(state.positions[1]) % config.n_sites
        and state.directions[0] * state.directions[1] == -1
    )


def _initial_state(
    config: DiscreteConfig, streams: WalkerStreams, initial
) -> DiscreteState:
    n, m = config.n_sites, config.n_walkers
    if isinstance(initial, DiscreteState):
        _check_state(initial, config)
        state = initial.copy()
        state.t = 0
    elif initial == "uniform-random":
        positions = streams.aux.integers(0, n, size=m).astype(np.int64)
        directions = (1 - 2 * streams.aux.integers(0, 2, size=m)).astype(np.int64)
        carrier = int(streams.aux.integers(m))
        state = DiscreteState(positions, directions, carrier)
    elif initial in ("regeneration", "regeneration-nu"):
        state = sample_nu(config, streams)
    else:
        raise errors.RelayError(f"unknown initial condition {initial!r}")
    # A holder moving counter-clockwise on top of a clockwise mover is
    # never observed after an update; resolve it now, uncounted.
    state.carrier, _ = _resolve_handoff(
        state.positions, state.directions, state.carrier, streams
    )
    return state


def simulate_discrete(
    config: DiscreteConfig,
    steps: int,
    seed: SeedSpec | int,
    initial="uniform-random",
    *,
    sample_every: int | None = None,
    trace_every: int | None = None,
) -> RunReport:
    """Run the lattice relay for a fixed number of rounds.

    Statistics cover rounds after a 1% burn-in, skipped entirely when
    the start is a contact state (the regeneration law needs none).
    sample_every records the walker state at that spacing for
    distribution tests; trace_every records the running speed and
    handoff rate from round 0 for convergence plots.
    """
    validate_discrete(config)
    if steps < 1:
        raise errors.RelayError(f"steps must be >= 1, got {steps}")
    spec = as_seed(seed)
    streams = WalkerStreams(spec, config.n_walkers)
    state = _initial_state(config, streams, initial)
    args = (config, steps, streams, state, sample_every, trace_every)
    if config.n_walkers == 2:
        report = _simulate_pair(*args)
    else:
        report = _simulate_many(*args)
    report.seeds = [[spec.master, spec.replica]]
    return report


def _windows(steps: int, in_regen: bool) -> tuple[int, int, int]:
    burn = 0 if in_regen else steps // 100
    recorded = steps - burn
    batch_len = recorded // N_BATCHES
    n_batches = N_BATCHES if batch_len >= 1 else 0
    return burn, batch_len, n_batches


def _params(config: DiscreteConfig, steps: int) -> dict:
    return {
        "model": "discrete",
        "N": config.n_sites,
        "epsilon": config.flip_prob,
        "m": config.n_walkers,
        "steps": steps,
    }


def _simulate_pair(config, steps, streams, state, sample_every, trace_every):
    n = config.n_sites
    eps = config.flip_prob
    burn, batch_len, n_batches = _windows(steps, in_regeneration_set(state, config))

    batch_disp = np.zeros(n_batches)
    batch_jump = np.zeros(n_batches)
    batch_clock = np.zeros(n_batches)
    disp_total = 0
    clock_total = 0
    jump_total = 0

    x1, x2 = int(state.positions[0]), int(state.positions[1])
    d1c, d2c = int(state.directions[0]), int(state.directions[1])
    car = state.carrier

    # contribution of round 0 (the initial state's carrier direction)
    d0val = d1c if car == 0 else d2c
    cum_before = d0val  # carrier displacement over rounds 0..t0
    jumps_all = 0  # handoffs over the whole run, for the trace
    if burn == 0:
        disp_total += d0val
        clock_total += int(d0val > 0)
        if n_batches:
            batch_disp[0] += d0val
            batch_clock[0] += d0val > 0

    rt_list, rc_list, ry_list, rcar_list = [], [], [], []
    if in_regeneration_set(state, config):
        rt_list.append(np.array([0]))
        rc_list.append(np.array([0]))  # displacement through round -1
        ry_list.append(np.array([0]))
        rcar_list.append(np.array([car]))

    sample_ts = (
        np.arange(burn + sample_every, steps + 1, sample_every)
        if sample_every
        else np.empty(0, dtype=np.int64)
    )
    trace_ts = (
        np.arange(trace_every, steps + 1, trace_every)
        if trace_every
        else np.empty(0, dtype=np.int64)
    )
    samples_x, samples_d = [], []
    trace_speed, trace_cost = [], []

    t0 = 0
    while t0 < steps:
        b = min(_BLOCK, steps - t0)
        s1 = 1 - 2 * (streams.walker[0].random(b) < eps).astype(np.int64)
        s2 = 1 - 2 * (streams.walker[1].random(b) < eps).astype(np.int64)
        d1 = d1c * np.cumprod(s1)  # directions at rounds t0+1 .. t0+b
        d2 = d2c * np.cumprod(s2)
        move1 = np.empty(b, dtype=np.int64)
        move1[0] = d1c
        move1[1:] = d1[:-1]
        move2 = np.empty(b, dtype=np.int64)
        move2[0] = d2c
        move2[1:] = d2[:-1]
        x1arr = x1 + np.cumsum(move1)  # unwrapped positions
        x2arr = x2 + np.cumsum(move2)
        ystar = x1arr - x2arr

        regen = ((ystar % n) == 0) & (d1 != d2)
        ridx = np.nonzero(regen)[0]
        rtau = t0 + 1 + ridx
        newcar = np.where(d1[ridx] == 1, 0, 1)
        segv = np.concatenate(([car], newcar))
        cararr = segv[np.searchsorted(ridx, np.arange(b), side="right")]
        di = np.where(cararr == 0, d1, d2)
        prefix = np.cumsum(di)

        tarr = np.arange(t0 + 1, t0 + b + 1)
        wmask = (tarr >= burn) & (tarr < steps)
        disp_total += int(di[wmask].sum())
        clock_total += int((di[wmask] > 0).sum())
        if n_batches:
            bidx = (tarr - burn) // batch_len
            bmask = wmask & (bidx < n_batches)
            batch_disp += np.bincount(
                bidx[bmask], weights=di[bmask], minlength=n_batches
            )
            batch_clock += np.bincount(
                bidx[bmask], weights=(di[bmask] > 0), minlength=n_batches
            )

        jumped = segv[1:] != segv[:-1]
        jmask = jumped & (rtau > burn)
        jump_total += int(jmask.sum())
        if n_batches and jmask.any():
            jb = (rtau[jmask] - 1 - burn) // batch_len
            jb = jb[jb < n_batches]
            batch_jump += np.bincount(jb, minlength=n_batches)

        if ridx.size:
            cum_prev = cum_before + np.where(ridx > 0, prefix[ridx - 1], 0)
            rt_list.append(rtau)
            rc_list.append(cum_prev)
            ry_list.append(ystar[ridx])
            rcar_list.append(newcar)

        hi = t0 + b
        sel = trace_ts[(trace_ts > t0) & (trace_ts <= hi)]
        if sel.size:
            off = sel - t0 - 2  # prefix index of round tau-1
            cums = np.where(off >= 0, prefix[np.maximum(off, 0)], 0) + cum_before
            jt = rtau[jumped]
            jcount = jumps_all + np.searchsorted(jt, sel, side="right")
            trace_speed.append(cums / sel)
            trace_cost.append(jcount / sel)
        sel = sample_ts[(sample_ts > t0) & (sample_ts <= hi)]
        if sel.size:
            idx = sel - t0 - 1
            samples_x.append(
                np.stack([x1arr[idx] % n, x2arr[idx] % n], axis=1)
            )
            samples_d.append(np.stack([d1[idx], d2[idx]], axis=1))

        cum_before += int(prefix[-1])
        jumps_all += int(jumped.sum())
        x1, x2 = int(x1arr[-1]), int(x2arr[-1])
        d1c, d2c = int(d1[-1]), int(d2[-1])
        car = int(cararr[-1]) if b else car
        t0 = hi

    if rt_list:
        rt = np.concatenate(rt_list)
        rc = np.concatenate(rc_list)
        ry = np.concatenate(ry_list)
        rcar = np.concatenate(rcar_list)
        lo = np.searchsorted(rt, burn, side="left")
        rt, rc, ry, rcar = rt[lo:], rc[lo:], ry[lo:], rcar[lo:]
    else:
        rt = np.empty(0, dtype=np.int64)
    if rt.size >= 2:
        cyc_len = np.diff(rt).astype(float)
        cyc_sum = np.diff(rc).astype(float)
        sign = np.where(rcar[:-1] == 0, 1, -1)
        cyc_disp = (sign * np.diff(ry)).astype(float)
        cyc_jump = rcar[1:] != rcar[:-1]
    else:
        cyc_len = cyc_sum = cyc_disp = np.empty(0)
        cyc_jump = np.empty(0, dtype=bool)

    return RunReport(
        kind="discrete",
        params=_params(config, steps),
        total_time=float(steps - burn),
        burn_in=float(burn),
        displacement_sum=float(disp_total),
        jump_count=jump_total,
        clockwise_time=float(clock_total),
        lap_length=2.0 * n,
        batch_duration=float(batch_len),
        batch_displacement=batch_disp,
        batch_jumps=batch_jump,
        batch_clockwise=batch_clock,
        cycle_lengths=cyc_len,
        cycle_displacements=cyc_disp,
        cycle_carrier_sums=cyc_sum,
        cycle_jumps=cyc_jump,
        sample_positions=np.concatenate(samples_x) if samples_x else None,
        sample_directions=np.concatenate(samples_d) if samples_d else None,
        trace_times=trace_ts.astype(float) if trace_every else None,
        trace_speed=np.concatenate(trace_speed) if trace_every else None,
        trace_cost=np.concatenate(trace_cost) if trace_every else None,
    )


def _simulate_many(config, steps, streams, state, sample_every, trace_every):
    # Reference path for 3+ walkers: plain per-round loop.  Regeneration
    # cycles are a two-walker construction, so none are recorded here.
    n = config.n_sites
    burn, batch_len, n_batches = _windows(steps, False)

    batch_disp = np.zeros(n_batches)
    batch_jump = np.zeros(n_batches)
    batch_clock = np.zeros(n_batches)
    disp_total = 0
    clock_total = 0
    jump_total = 0
    cum_all = 0
    jumps_all = 0
    samples_x, samples_d = [], []
    trace_t, trace_speed, trace_cost = [], [], []

    for t in range(steps):
        dval = int(state.directions[state.carrier])
        cum_all += dval
        if t >= burn:
            disp_total += dval
            clock_total += int(dval > 0)
            if n_batches:
                bi = (t - burn) // batch_len
                if bi < n_batches:
                    batch_disp[bi] += dval
                    batch_clock[bi] += dval > 0
        state, jumped = step(state, config, streams)
        if jumped:
            jumps_all += 1
            if t >= burn:
                jump_total += 1
                if n_batches:
                    bi = (t - burn) // batch_len
                    if bi < n_batches:
                        batch_jump[bi] += 1
        now = t + 1
        if trace_every and now % trace_every == 0:
            trace_t.append(now)
            trace_speed.append(cum_all / now)
            trace_cost.append(jumps_all / now)
        if sample_every and now > burn and (now - burn) % sample_every == 0:
            samples_x.append(state.positions.copy())
            samples_d.append(state.directions.copy())

    return RunReport(
        kind="discrete",
        params=_params(config, steps),
        total_time=float(steps - burn),
        burn_in=float(burn),
        displacement_sum=float(disp_total),
        jump_count=jump_total,
        clockwise_time=float(clock_total),
        lap_length=2.0 * n,
        batch_duration=float(batch_len),
        batch_displacement=batch_disp,
        batch_jumps=batch_jump,
        batch_clockwise=batch_clock,
        # regeneration bookkeeping is a two-walker notion
        cycle_lengths=None,
        cycle_displacements=None,
        cycle_carrier_sums=None,
        cycle_jumps=None,
        sample_positions=np.stack(samples_x) if samples_x else None,
        sample_directions=np.stack(samples_d) if samples_d else None,
        trace_times=np.asarray(trace_t, dtype=float) if trace_every else None,
        trace_speed=np.asarray(trace_speed) if trace_every else None,
        trace_cost=np.asarray(trace_cost) if trace_every else None,
    )
