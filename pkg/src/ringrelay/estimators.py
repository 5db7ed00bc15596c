"""Statistics extracted from simulation runs.

A RunReport is the common currency between the two simulators, the
estimators, and the command line tools: windowed totals for the three
long-run observables, fixed-count batch sums for error bars, per-cycle
records between successive regeneration contacts, and optional raw
equilibrium samples.  Merging reports concatenates trajectories in the
obvious way, so replica parallelism never changes any count or sum.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.stats

from . import errors

N_BATCHES = 50


@dataclass
class RunReport:
    """Windowed statistics of one simulated trajectory (or a merge).

    Totals cover the recorded window (after burn-in): total_time is its
    duration in rounds or time units, displacement_sum the carrier's net
    clockwise displacement (site steps, or length units), jump_count the
    number of handoffs, clockwise_time the duration the carrier spent
    moving clockwise.  Batches split the window into equal spans; cycle
    arrays hold one entry per completed regeneration cycle: its length,
    the carrier's net displacement around its partner (0 or lap_length),
    the carrier displacement accumulated inside it, and whether it ended
    with a handoff.
    """

    kind: str
    params: dict
    total_time: float
    burn_in: float
    displacement_sum: float
    jump_count: int
    clockwise_time: float
    lap_length: float
    batch_duration: float
    batch_displacement: np.ndarray
    batch_jumps: np.ndarray
    batch_clockwise: np.ndarray
    cycle_lengths: np.ndarray
    cycle_displacements: np.ndarray
    cycle_carrier_sums: np.ndarray
    cycle_jumps: np.ndarray
    sample_positions: np.ndarray | None = None
    sample_directions: np.ndarray | None = None
    trace_times: np.ndarray | None = None
    trace_speed: np.ndarray | None = None
    trace_cost: np.ndarray | None = None
    seeds: list = field(default_factory=list)

    @property
    def n_cycles(self) -> int:
        return 0 if self.cycle_lengths is None else len(self.cycle_lengths)

    def to_dict(self) -> dict:
        def tolist(a):
            return None if a is None else np.asarray(a).tolist()

        return {
            "kind": self.kind,
            "params": self.params,
            "total_time": self.total_time,
            "burn_in": self.burn_in,
            "displacement_sum": self.displacement_sum,
            "jump_count": int(self.jump_count),
            "clockwise_time": self.clockwise_time,
            "lap_length": self.lap_length,
            "batch_duration": self.batch_duration,
            "batch_displacement": tolist(self.batch_displacement),
            "batch_jumps": tolist(self.batch_jumps),
            "batch_clockwise": tolist(self.batch_clockwise),
            "cycle_lengths": tolist(self.cycle_lengths),
            "cycle_displacements": tolist(self.cycle_displacements),
            "cycle_carrier_sums": tolist(self.cycle_carrier_sums),
            "cycle_jumps": tolist(self.cycle_jumps),
            "sample_positions": tolist(self.sample_positions),
            "sample_directions": tolist(self.sample_directions),
            "trace_times": tolist(self.trace_times),
            "trace_speed": tolist(self.trace_speed),
            "trace_cost": tolist(self.trace_cost),
            "seeds": self.seeds,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        def arr(key, dtype=float):
            value = data[key]
            return None if value is None else np.asarray(value, dtype=dtype)

        return cls(
            kind=data["kind"],
            params=data["params"],
            total_time=data["total_time"],
            burn_in=data["burn_in"],
            displacement_sum=data["displacement_sum"],
            jump_count=data["jump_count"],
            clockwise_time=data["clockwise_time"],
            lap_length=data["lap_length"],
            batch_duration=data["batch_duration"],
            batch_displacement=arr("batch_displacement"),
            batch_jumps=arr("batch_jumps"),
            batch_clockwise=arr("batch_clockwise"),
            cycle_lengths=arr("cycle_lengths"),
            cycle_displacements=arr("cycle_displacements"),
            cycle_carrier_sums=arr("cycle_carrier_sums"),
            cycle_jumps=arr("cycle_jumps", dtype=bool),
            sample_positions=arr("sample_positions"),
            sample_directions=arr("sample_directions"),
            trace_times=arr("trace_times"),
            trace_speed=arr("trace_speed"),
            trace_cost=arr("trace_cost"),
            seeds=list(data.get("seeds", [])),
        )


def merge(reports: list[RunReport]) -> RunReport:
    """Pool replicas: sums add, batch and cycle arrays concatenate."""
    if not reports:
        raise errors.RelayError("nothing to merge")
    head = reports[0]
    for r in reports[1:]:
        if r.kind != head.kind or r.params != head.params:
            raise errors.RelayError("cannot merge reports with different models")
        if not np.isclose(r.batch_duration, head.batch_duration):
            raise errors.RelayError("cannot merge reports with different batching")

    def cat(key):
        parts = [getattr(r, key) for r in reports]
        return None if any(p is None for p in parts) else np.concatenate(parts)

    return RunReport(
        kind=head.kind,
        params=head.params,
        total_time=sum(r.total_time for r in reports),
        burn_in=sum(r.burn_in for r in reports),
        displacement_sum=sum(r.displacement_sum for r in reports),
        jump_count=sum(r.jump_count for r in reports),
        clockwise_time=sum(r.clockwise_time for r in reports),
        lap_length=head.lap_length,
        batch_duration=head.batch_duration,
        batch_displacement=cat("batch_displacement"),
        batch_jumps=cat("batch_jumps"),
        batch_clockwise=cat("batch_clockwise"),
        cycle_lengths=cat("cycle_lengths"),
        cycle_displacements=cat("cycle_displacements"),
        cycle_carrier_sums=cat("cycle_carrier_sums"),
        cycle_jumps=cat("cycle_jumps"),
        sample_positions=cat("sample_positions"),
        sample_directions=cat("sample_directions"),
        seeds=[s for r in reports for s in r.seeds],
    )


class Estimate(NamedTuple):
    point: float
    stderr: float
    n_batches: int


def _batch_estimate(report: RunReport, batch_sums: np.ndarray, total: float) -> Estimate:
    n = len(batch_sums)
    if n < 20:
        raise errors.TooFewBatches(f"need at least 20 batches, got {n}")
    means = batch_sums / report.batch_duration
    stderr = float(means.std(ddof=1) / np.sqrt(n))
    return Estimate(float(total / report.total_time), stderr, n)


def speed_estimate(report: RunReport) -> Estimate:
    """Net clockwise displacement rate of the message, with batch SE."""
    return _batch_estimate(report, report.batch_displacement, report.displacement_sum)


def cost_estimate(report: RunReport) -> Estimate:
    """Handoff rate, with batch-means standard error."""
    return _batch_estimate(report, report.batch_jumps, float(report.jump_count))


def direction_estimate(report: RunReport) -> Estimate:
    """Fraction of the window the carrier moved clockwise."""
    return _batch_estimate(report, report.batch_clockwise, report.clockwise_time)


class KacCheck(NamedTuple):
    cycle_mean: float
    stationary_product: float
    gap: float
    rel_gap: float
    stderr: float
    n_cycles: int


def kac_check(
    report: RunReport,
    f_cycle_sums: np.ndarray | None = None,
    f_time_average: float | None = None,
    f_time_stderr: float | None = None,
) -> KacCheck:
    """Cycle-sum identity: mean per-cycle sum of f against the product
    of mean cycle length and the long-run time average of f.

    Defaults check the carrier displacement itself, using the report's
    own windowed average; for a sharper test pass a time average (and
    its standard error) obtained from an independent run.  The returned
    stderr combines the cycle-side and product-side errors, so the two
    routes agree when gap is within a few stderr of zero.
    """
    if report.n_cycles < 100:
        raise errors.TooFewCycles(
            f"need at least 100 cycles, got {report.n_cycles}"
        )
    sums = (
        report.cycle_carrier_sums if f_cycle_sums is None else np.asarray(f_cycle_sums)
    )
    if len(sums) != report.n_cycles:
        raise errors.RelayError("one sum per cycle required")
    if f_time_average is None:
        est = speed_estimate(report)
        f_time_average, f_time_stderr = est.point, est.stderr
    if f_time_stderr is None:
        f_time_stderr = 0.0

    n = report.n_cycles
    lengths = report.cycle_lengths
    cycle_mean = float(sums.mean())
    se_cycle = float(sums.std(ddof=1) / np.sqrt(n))
    mean_len = float(lengths.mean())
    se_len = float(lengths.std(ddof=1) / np.sqrt(n))
    product = mean_len * f_time_average
    se_product = np.hypot(f_time_average * se_len, mean_len * f_time_stderr)
    gap = cycle_mean - product
    stderr = float(np.hypot(se_cycle, se_product))
    rel = abs(gap) / max(abs(product), np.finfo(float).tiny)
    return KacCheck(cycle_mean, product, gap, rel, stderr, n)


class ExcursionSummary(NamedTuple):
    n_cycles: int
    wrap_count: int
    wrap_fraction: float
    max_deviation: float


def excursion_classifier(report: RunReport) -> ExcursionSummary:
    """Split cycles into closed (relative displacement 0) and wrapped
    (one full lap), reporting the worst distance to either target."""
    if report.n_cycles == 0:
        raise errors.NoCycles("report has no completed cycles")
    disp = report.cycle_displacements
    lap = report.lap_length
    wrapped = disp > lap / 2.0
    deviation = np.where(wrapped, np.abs(disp - lap), np.abs(disp))
    return ExcursionSummary(
        report.n_cycles,
        int(wrapped.sum()),
        float(wrapped.mean()),
        float(deviation.max()),
    )


class UniformityResult(NamedTuple):
    statistic: float
    pvalue: float
    dof: int
    n_samples: int


def chi_square_uniformity(
    positions: np.ndarray,
    directions: np.ndarray,
    circumference: float,
    position_bins: int,
    min_expected: float = 20.0,
) -> UniformityResult:
    """Chi-square test of joint uniformity of positions and directions.

    Positions are cut into equal arcs (for the lattice pass n_sites as
    position_bins so each site is its own cell) and crossed with the
    direction signs of every walker, giving (position_bins * 2)^m
    equiprobable cells under the product-uniform law.
    """
    pos = np.asarray(positions, dtype=float)
    dirs = np.asarray(directions)
    k, m = pos.shape
    bins = np.minimum((pos / circumference * position_bins).astype(int),
                      position_bins - 1)
    cells_per_walker = position_bins * 2
    cell = np.zeros(k, dtype=np.int64)
    for j in range(m):
        cell = cell * cells_per_walker + bins[:, j] * 2 + (dirs[:, j] > 0)
    n_cells = cells_per_walker**m
    if k / n_cells < min_expected:
        raise errors.TooFewSamples(
            f"{k} samples over {n_cells} cells leaves expected count "
            f"{k / n_cells:.1f} < {min_expected}"
        )
    counts = np.bincount(cell, minlength=n_cells)
    stat, pvalue = scipy.stats.chisquare(counts)
    return UniformityResult(float(stat), float(pvalue), n_cells - 1, k)


def uniformity_test(
    report: RunReport,
    position_bins: int | None = None,
    min_expected: float = 20.0,
) -> UniformityResult:
    """Equilibrium check on the samples a simulator recorded.

    The simulators take samples at wide spacings (at least ten rounds
    per site, or ten crossing times) precisely so this test sees nearly
    independent draws.  Default binning: one cell per site for the
    lattice, max(8, ceil(circumference)) equal arcs for the continuum.
    """
    if report.sample_positions is None or len(report.sample_positions) == 0:
        raise errors.TooFewSamples("report carries no equilibrium samples")
    circumference = float(report.params["N"])
    if position_bins is None:
        if report.kind == "discrete":
            position_bins = int(report.params["N"])
        else:
            position_bins = max(8, int(np.ceil(circumference)))
    return chi_square_uniformity(
        report.sample_positions,
        report.sample_directions,
        circumference,
        position_bins,
        min_expected,
    )
