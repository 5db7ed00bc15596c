"""Acceptance checklist: every advertised number, verified three ways.

Each check pits at least two independent routes against each other:
Monte Carlo against closed forms, linear-algebra solves against both,
and internal identities (cycle sums, excursion laws, generator drifts)
against all of them.  The command line `validate` subcommand and the
acceptance test suite both run exactly these functions, so a pass here
is a pass there.

Heavy simulations are cached on the context object; checks that share a
run (for example the excursion law reuses the continuum regeneration
run) see literally the same trajectory.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import closed_form, estimators, exact
from .continuous import ContinuousState, sample_walker_states, simulate_continuous
from .discrete import DiscreteState, simulate_discrete
from .estimators import chi_square_uniformity, merge
from .model import ContinuousConfig, DiscreteConfig, SeedSpec

DEFAULT_SEED = 20260815

GRID_N = (3, 5, 7, 11, 25, 101)
GRID_EPS = (0.05, 0.1, 0.3, 0.5, 0.7, 0.9)


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: dict
    tolerance: str
    reference: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(
            f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
            for k, v in self.measured.items()
        )
        return f"{status} {self.name} [{self.seconds:.1f}s] {shown}"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "measured": self.measured,
            "tolerance": self.tolerance,
            "reference": self.reference,
            "seconds": round(self.seconds, 3),
        }


def _mc_discrete(args):
    config, steps, seed, initial = args
    if initial is not None and not isinstance(initial, str):
        initial = DiscreteState(
            np.asarray(initial[0], dtype=np.int64),
            np.asarray(initial[1], dtype=np.int64),
            int(initial[2]),
        )
    return simulate_discrete(config, steps, seed, initial or "uniform-random")


class AcceptanceContext:
    """Seeded, memoised runner for the simulations the checks share."""

    def __init__(self, master_seed: int = DEFAULT_SEED, threads: int = 1):
        self.master_seed = master_seed
        self.threads = threads
        self._cache: dict = {}

    def _memo(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    def _map(self, func, jobs):
        if self.threads > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(func, jobs))
        return [func(j) for j in jobs]

    def exact_grid(self):
        def build():
            return {
                (n, eps): exact.exact_metrics(n, eps)
                for n in GRID_N
                for eps in GRID_EPS
            }

        return self._memo("exact_grid", build)

    def discrete_reference_run(self):
        # N=11, eps=0.1, 8 replicas of 1e6 rounds, pooled
        def build():
            config = DiscreteConfig(11, 0.1)
            jobs = [
                (config, 10**6, SeedSpec(self.master_seed, k), None)
                for k in range(8)
            ]
            return merge(self._map(_mc_discrete, jobs))

        return self._memo("discrete_reference", build)

    def continuous_reference_run(self):
        def build():
            config = ContinuousConfig(2.0)
            return simulate_continuous(
                config, 1e6, SeedSpec(self.master_seed, 30)
            )

        return self._memo("continuous_reference", build)

    def discrete_regen_runs(self):
        def build():
            config = DiscreteConfig(5, 0.3)
            return [
                simulate_discrete(
                    config, 3 * 10**5, SeedSpec(self.master_seed, 10 + k),
                    "regeneration",
                )
                for k in range(2)
            ]

        return self._memo("discrete_regen", build)

    def continuous_regen_runs(self):
        def build():
            config = ContinuousConfig(1.0)
            return [
                simulate_continuous(
                    config, 2e4, SeedSpec(self.master_seed, 20 + k), "regeneration"
                )
                for k in range(2)
            ]

        return self._memo("continuous_regen", build)


# ----------------------------------------------------------------------
# the checks


def check_exact_stationary(ctx: AcceptanceContext) -> CheckResult:
    worst_s = worst_c = worst_res = 0.0
    for (n, eps), metrics in ctx.exact_grid().items():
        s = closed_form.speed_discrete(n, eps)
        worst_s = max(worst_s, abs(metrics.speed - s))
        worst_c = max(worst_c, abs(metrics.cost - eps * s))
        worst_res = max(worst_res, metrics.residual)
    passed = worst_s <= 1e-10 and worst_c <= 1e-10
    return CheckResult(
        "exact-stationary-matches-formulas",
        passed,
        {
            "grid_points": len(GRID_N) * len(GRID_EPS),
            "max_speed_dev": worst_s,
            "max_cost_dev": worst_c,
            "max_residual": worst_res,
        },
        "abs deviation <= 1e-10 on the full grid",
        "stationary law of the (gap, directions, carrier) chain vs "
        "s=(1-eps)/(2(1+eps(N-2))) and c=eps*s",
    )


def check_crossing_prob(ctx: AcceptanceContext) -> CheckResult:
    worst_oracle = worst_closed = worst_speed = worst_res = 0.0
    metrics = ctx.exact_grid()
    for n in GRID_N:
        for eps in GRID_EPS:
            sol = exact.solve_trace_bvp(n, eps)
            a = sol.crossing_prob
            worst_oracle = max(
                worst_oracle, abs(a - exact.hitting_prob_oracle(n, eps))
            )
            worst_closed = max(
                worst_closed, abs(a - (1 - eps) / (1 + eps * (n - 2)))
            )
            worst_speed = max(worst_speed, abs(metrics[(n, eps)].speed - a / 2))
            worst_res = max(worst_res, exact.bvp_residual(sol))
    passed = (
        worst_oracle <= 1e-10 and worst_closed <= 1e-10 and worst_speed <= 1e-10
    )
    return CheckResult(
        "crossing-prob-three-routes",
        passed,
        {
            "max_vs_oracle": worst_oracle,
            "max_vs_closed": worst_closed,
            "max_speed_vs_half_A": worst_speed,
            "max_bvp_residual": worst_res,
        },
        "abs deviation <= 1e-10 across routes; recursion residual reported",
        "wrap probability by recursion solve, absorbing-chain solve, and "
        "(1-eps)/(1+eps(N-2)); speed equals half of it",
    )


def check_discrete_mc(ctx: AcceptanceContext) -> CheckResult:
    report = ctx.discrete_reference_run()
    s_target = closed_form.speed_discrete(11, 0.1)
    c_target = closed_form.cost_discrete(11, 0.1)
    s = estimators.speed_estimate(report)
    c = estimators.cost_estimate(report)
    passed = (
        abs(s.point - s_target) <= 3 * s.stderr
        and abs(c.point - c_target) <= 3 * c.stderr
    )
    return CheckResult(
        "discrete-monte-carlo",
        passed,
        {
            "speed": s.point,
            "speed_target": s_target,
            "speed_sigmas": abs(s.point - s_target) / s.stderr,
            "cost": c.point,
            "cost_target": c_target,
            "cost_sigmas": abs(c.point - c_target) / c.stderr,
            "speed_rel_err": abs(s.point - s_target) / s_target,
            "cost_rel_err": abs(c.point - c_target) / c_target,
        },
        "within 3 batch-means standard errors (8 x 1e6 rounds)",
        "lattice Monte Carlo vs closed forms at N=11, eps=0.1",
    )


def check_continuous_mc(ctx: AcceptanceContext) -> CheckResult:
    report = ctx.continuous_reference_run()
    s_target = closed_form.speed_continuous(2.0, 1.0, 1.0)
    c_target = closed_form.cost_continuous(2.0, 1.0, 1.0)
    s = estimators.speed_estimate(report)
    c = estimators.cost_estimate(report)
    passed = (
        abs(s.point - s_target) <= 3 * s.stderr
        and abs(c.point - c_target) <= 3 * c.stderr
    )
    return CheckResult(
        "continuous-monte-carlo",
        passed,
        {
            "speed": s.point,
            "speed_sigmas": abs(s.point - s_target) / s.stderr,
            "cost": c.point,
            "cost_sigmas": abs(c.point - c_target) / c.stderr,
            "target": s_target,
        },
        "within 3 batch-means standard errors (horizon 1e6)",
        "continuum Monte Carlo vs v^2/(2v+rN) and rv/(2v+rN) at N=2, v=r=1",
    )


def check_regeneration(ctx: AcceptanceContext) -> CheckResult:
    d_run, d_indep = ctx.discrete_regen_runs()
    c_run, c_indep = ctx.continuous_regen_runs()

    measured: dict = {}
    ok = True

    dl = d_run.cycle_lengths
    se = dl.std(ddof=1) / np.sqrt(len(dl))
    measured["d_cycles"] = len(dl)
    measured["d_mean_len"] = float(dl.mean())
    measured["d_len_sigmas"] = abs(dl.mean() - 10.0) / se
    ok &= len(dl) >= 10**4 and abs(dl.mean() - 10.0) <= 3 * se

    cl = c_run.cycle_lengths
    se = cl.std(ddof=1) / np.sqrt(len(cl))
    measured["c_cycles"] = len(cl)
    measured["c_mean_len"] = float(cl.mean())
    measured["c_len_sigmas"] = abs(cl.mean() - 1.0) / se
    ok &= abs(cl.mean() - 1.0) <= 3 * se

    d_avg = estimators.speed_estimate(d_indep)
    kd = estimators.kac_check(d_run, None, d_avg.point, d_avg.stderr)
    measured["d_kac_sigmas"] = abs(kd.gap) / kd.stderr
    ok &= abs(kd.gap) <= 3 * kd.stderr

    c_avg = estimators.speed_estimate(c_indep)
    kc = estimators.kac_check(c_run, None, c_avg.point, c_avg.stderr)
    measured["c_kac_sigmas"] = abs(kc.gap) / kc.stderr
    ok &= abs(kc.gap) <= 3 * kc.stderr

    return CheckResult(
        "regeneration-cycles",
        bool(ok),
        measured,
        "mean length within 3 SE of 2N rounds / N/v time over >= 1e4 cycles; "
        "cycle-sum identity within 3 combined SE",
        "mean regeneration cycle 2N (lattice) and N/v (continuum); "
        "per-cycle sums vs mean length times long-run average",
    )


def check_excursions(ctx: AcceptanceContext) -> CheckResult:
    report = ctx.continuous_regen_runs()[0]
    summary = estimators.excursion_classifier(report)
    n = summary.n_cycles
    wrap = summary.wrap_fraction
    se_wrap = np.sqrt(max(wrap * (1 - wrap), 1e-12) / n)
    jumps = report.cycle_jumps.mean()
    se_jump = np.sqrt(max(jumps * (1 - jumps), 1e-12) / n)
    ok = (
        abs(wrap - 2 / 3) <= 3 * se_wrap
        and abs(jumps - 1 / 3) <= 3 * se_jump
        and summary.max_deviation <= 1e-9 * report.lap_length
    )
    return CheckResult(
        "excursion-law",
        bool(ok),
        {
            "cycles": n,
            "wrap_fraction": wrap,
            "wrap_sigmas": abs(wrap - 2 / 3) / se_wrap,
            "jump_fraction": float(jumps),
            "jump_sigmas": abs(jumps - 1 / 3) / se_jump,
            "max_displacement_dev": summary.max_deviation,
        },
        "fractions within 3 SE of 2/3 and 1/3; displacements within 1e-9 of {0, N}",
        "wrap fraction 2v/(2v+rN); handoffs per cycle rN/(2v+rN); "
        "relative displacement in {0, N}",
    )


def check_generator(ctx: AcceptanceContext) -> CheckResult:
    rng = np.random.default_rng(
        np.random.SeedSequence(ctx.master_seed, spawn_key=(7000,))
    )
    worst_h = worst_v = 0.0
    n_states = 0
    for _ in range(20):
        config = ContinuousConfig(
            circumference=float(rng.uniform(0.5, 5.0)),
            speed=float(rng.uniform(0.5, 3.0)),
            switch_rate=float(rng.uniform(0.2, 3.0)),
        )
        h_func, h_part = exact.h_field(config)
        v_func, v_part = exact.v_field(config)
        for _ in range(50):
            x1 = rng.uniform(0, config.circumference)
            gap = rng.uniform(1e-6, 1 - 1e-6) * config.circumference
            x = np.array([x1, (x1 - gap) % config.circumference])
            d = 1 - 2 * rng.integers(0, 2, size=2)
            carrier = int(rng.integers(2))
            lh = exact.apply_generator(h_func, x, d, carrier, config, h_part)
            lv = exact.apply_generator(v_func, x, d, carrier, config, v_part)
            worst_h = max(worst_h, abs(lh + 1.0))
            worst_v = max(worst_v, abs(lv))
            n_states += 1
    ok = worst_h <= 1e-9 and worst_v <= 1e-9
    return CheckResult(
        "generator-identities",
        bool(ok),
        {"states": n_states, "max_LH_dev": worst_h, "max_LV_dev": worst_v},
        "|LH+1| and |LV| <= 1e-9 at 1000 off-contact states, 20 parameter triples",
        "generator drift of the contact-time potential is -1; "
        "of the wrap probability is 0",
    )


def check_direction(ctx: AcceptanceContext) -> CheckResult:
    d_report = merge(ctx.discrete_regen_runs())
    d_target = closed_form.direction_prob_discrete(5, 0.3)
    d = estimators.direction_estimate(d_report)
    c_report = ctx.continuous_reference_run()
    c_target = closed_form.direction_prob_continuous(2.0, 1.0, 1.0)
    c = estimators.direction_estimate(c_report)
    ok = (
        abs(d.point - d_target) <= 3 * d.stderr
        and abs(c.point - c_target) <= 3 * c.stderr
    )
    return CheckResult(
        "direction-occupation",
        bool(ok),
        {
            "discrete": d.point,
            "discrete_target": d_target,
            "discrete_sigmas": abs(d.point - d_target) / d.stderr,
            "continuous": c.point,
            "continuous_target": c_target,
            "continuous_sigmas": abs(c.point - c_target) / c.stderr,
        },
        "within 3 batch-means standard errors",
        "clockwise occupation (3+eps(2N-5))/(4(1+eps(N-2))) and "
        "(3v+rN)/(2(2v+rN))",
    )


def check_scaling(ctx: AcceptanceContext) -> CheckResult:
    sizes = (5, 21, 101, 1001)
    speed_errors = [
        closed_form.scaling_limit_error(n, 1.0, 1.0).speed_error for n in sizes
    ]
    decreasing = all(a > b for a, b in zip(speed_errors, speed_errors[1:]))
    # independent rational oracle: the gap works out to 1/(6N-4) exactly
    oracle = {n: Fraction(1, 6 * n - 4) for n in sizes}
    dev5 = abs(speed_errors[0] - float(oracle[5]))
    dev101 = abs(speed_errors[2] - float(oracle[101]))
    ok = (
        decreasing
        and speed_errors[3] < 0.002
        and dev5 <= 1e-6
        and dev101 <= 1e-6
        and round(speed_errors[0], 4) == 0.0385
        and round(speed_errors[2], 5) == 0.00166
    )
    return CheckResult(
        "continuum-limit",
        bool(ok),
        {
            "err_N5": speed_errors[0],
            "err_N21": speed_errors[1],
            "err_N101": speed_errors[2],
            "err_N1001": speed_errors[3],
            "decreasing": decreasing,
            "dev_vs_rational_N5": dev5,
            "dev_vs_rational_N101": dev101,
        },
        "errors decrease in N, < 0.002 at N=1001, match 1/(6N-4) to 1e-6 "
        "(0.0385 at N=5, 0.00166 at N=101 after rounding)",
        "lattice-to-continuum relative speed error 1/(6N-4) at matched "
        "parameters (eps = 1/(2N), v=r=N_c=1)",
    )


def _uniformity_pass_count_discrete(ctx: AcceptanceContext) -> int:
    config = DiscreteConfig(5, 0.3)
    gap = 10 * config.n_sites
    steps = 205_000  # ~4000 samples at the 10N spacing after burn-in
    passes = 0
    for k in range(100):
        report = simulate_discrete(
            config, steps, SeedSpec(ctx.master_seed, 1000 + k), sample_every=gap
        )
        result = estimators.uniformity_test(report)
        passes += result.pvalue > 0.01
    return passes


def _uniformity_pass_count_continuous(ctx: AcceptanceContext) -> int:
    config = ContinuousConfig(1.0)
    spacing = 10 * config.circumference / config.speed
    # 16 arcs-by-direction cells per walker -> 256 joint cells; 6000
    # samples keeps every expected count above 20
    times = 10 * config.circumference + spacing * np.arange(1, 6001)
    passes = 0
    for k in range(100):
        pos, dirs = sample_walker_states(
            config, times, SeedSpec(ctx.master_seed, 2000 + k)
        )
        result = chi_square_uniformity(pos, dirs, config.circumference, 8)
        passes += result.pvalue > 0.01
    return passes


def check_uniformity(ctx: AcceptanceContext) -> CheckResult:
    d_passes = _uniformity_pass_count_discrete(ctx)
    c_passes = _uniformity_pass_count_continuous(ctx)
    ok = d_passes >= 95 and c_passes >= 95
    return CheckResult(
        "equilibrium-uniformity",
        bool(ok),
        {"discrete_passes": d_passes, "continuous_passes": c_passes},
        "chi-square at significance 0.01 passes in >= 95 of 100 replications",
        "joint law of positions and directions is uniform in equilibrium",
    )


INDEPENDENCE_STATES = [
    ([0, 0], [1, 1], 0),
    ([0, 2], [1, -1], 0),
    ([1, 4], [-1, -1], 1),
    ([2, 2], [-1, 1], 0),
    ([3, 1], [-1, 1], 1),
]


def check_initial_independence(ctx: AcceptanceContext) -> CheckResult:
    config = DiscreteConfig(5, 0.3)
    jobs = [
        (config, 10**6, SeedSpec(ctx.master_seed, 3000 + k), state)
        for k, state in enumerate(INDEPENDENCE_STATES)
    ]
    reports = ctx._map(_mc_discrete, jobs)
    ests = [estimators.speed_estimate(r) for r in reports]
    worst = 0.0
    ok = True
    for i in range(len(ests)):
        for j in range(i + 1, len(ests)):
            sigma = np.hypot(ests[i].stderr, ests[j].stderr)
            sigmas = abs(ests[i].point - ests[j].point) / sigma
            worst = max(worst, sigmas)
            ok &= sigmas <= 3.0
    return CheckResult(
        "initial-state-independence",
        bool(ok),
        {
            "runs": len(ests),
            "speeds": [round(e.point, 6) for e in ests],
            "max_pairwise_sigmas": worst,
        },
        "pairwise within 3 combined standard errors (5 starts, 1e6 rounds each)",
        "time averages do not depend on the initial state",
    )


ALL_CHECKS = [
    check_exact_stationary,
    check_crossing_prob,
    check_discrete_mc,
    check_continuous_mc,
    check_regeneration,
    check_excursions,
    check_generator,
    check_direction,
    check_scaling,
    check_uniformity,
    check_initial_independence,
]


def run_all(
    master_seed: int = DEFAULT_SEED, threads: int = 1, emit=None
) -> list[CheckResult]:
    ctx = AcceptanceContext(master_seed, threads)
    results = []
    for check in ALL_CHECKS:
        start = time.perf_counter()
        result = check(ctx)
        result.seconds = time.perf_counter() - start
        results.append(result)
        if emit is not None:
            emit(result.line())
    return results
