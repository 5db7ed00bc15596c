"""Estimator layer on synthetic reports with known answers."""
import numpy as np
import pytest
import scipy.stats

from ringrelay import errors, estimators
from ringrelay.estimators import (
    RunReport,
    chi_square_uniformity,
    cost_estimate,
    direction_estimate,
    excursion_classifier,
    kac_check,
    merge,
    speed_estimate,
    uniformity_test,
)


def make_report(
    batch_disp,
    batch_jumps=None,
    batch_cw=None,
    batch_duration=10.0,
    cycles=None,
    kind="discrete",
    lap=10.0,
):
    batch_disp = np.asarray(batch_disp, dtype=float)
    nb = len(batch_disp)
    if batch_jumps is None:
        batch_jumps = np.zeros(nb)
    if batch_cw is None:
        batch_cw = np.full(nb, batch_duration / 2)
    if cycles is None:
        lengths = disp = sums = jumps = np.array([])
    else:
        lengths, disp, sums, jumps = cycles
    total = nb * batch_duration
    return RunReport(
        kind=kind,
        params={"model": kind, "N": 5},
        total_time=total,
        burn_in=0.0,
        displacement_sum=float(np.sum(batch_disp)),
        jump_count=int(np.sum(batch_jumps)),
        clockwise_time=float(np.sum(batch_cw)),
        lap_length=lap,
        batch_duration=batch_duration,
        batch_displacement=batch_disp,
        batch_jumps=np.asarray(batch_jumps, dtype=float),
        batch_clockwise=np.asarray(batch_cw, dtype=float),
        cycle_lengths=np.asarray(lengths, dtype=float),
        cycle_displacements=np.asarray(disp, dtype=float),
        cycle_carrier_sums=np.asarray(sums, dtype=float),
        cycle_jumps=np.asarray(jumps, dtype=bool),
    )


class TestBatchEstimates:
    def test_point_and_stderr_known_case(self):
        rng = np.random.default_rng(0)
        sums = rng.normal(3.0, 0.5, size=50)
        report = make_report(sums, batch_duration=10.0)
        est = speed_estimate(report)
        assert est.point == pytest.approx(sums.sum() / 500.0)
        means = sums / 10.0
        assert est.stderr == pytest.approx(means.std(ddof=1) / np.sqrt(50))
        assert est.n_batches == 50

    def test_constant_batches_have_zero_error(self):
        report = make_report(np.full(50, 2.0))
        assert speed_estimate(report).stderr == pytest.approx(0.0, abs=1e-15)

    def test_too_few_batches_raises(self):
        report = make_report(np.ones(10))
        with pytest.raises(errors.TooFewBatches):
            speed_estimate(report)

    def test_cost_and_direction_use_their_own_columns(self):
        report = make_report(
            np.ones(25), batch_jumps=np.full(25, 3.0), batch_cw=np.full(25, 7.0)
        )
        assert cost_estimate(report).point == pytest.approx(3.0 / 10.0)
        assert direction_estimate(report).point == pytest.approx(0.7)


class TestMerge:
    def run(self, seed):
        rng = np.random.default_rng(seed)
        cycles = (
            rng.integers(1, 20, size=30).astype(float),
            rng.choice([0.0, 10.0], size=30),
            rng.normal(size=30),
            rng.integers(0, 2, size=30).astype(bool),
        )
        return make_report(rng.normal(5, 1, size=50), cycles=cycles)

    def test_merge_pools_everything(self):
        a, b = self.run(1), self.run(2)
        m = merge([a, b])
        assert m.total_time == a.total_time + b.total_time
        assert m.displacement_sum == pytest.approx(
            a.displacement_sum + b.displacement_sum
        )
        assert m.n_cycles == 60
        assert len(m.batch_displacement) == 100
        np.testing.assert_array_equal(
            m.cycle_lengths, np.concatenate([a.cycle_lengths, b.cycle_lengths])
        )

    def test_merge_is_associative_on_estimates(self):
        a, b, c = self.run(1), self.run(2), self.run(3)
        left = speed_estimate(merge([merge([a, b]), c]))
        right = speed_estimate(merge([a, merge([b, c])]))
        assert left.point == pytest.approx(right.point, rel=1e-14)
        assert left.stderr == pytest.approx(right.stderr, rel=1e-12)

    def test_merge_rejects_mismatched_models(self):
        a = self.run(1)
        b = self.run(2)
        b.params = {"model": "discrete", "N": 7}
        with pytest.raises(errors.RelayError):
            merge([a, b])

    def test_merge_empty_rejected(self):
        with pytest.raises(errors.RelayError):
            merge([])


class TestRoundTrip:
    def test_to_from_dict(self):
        report = TestMerge().run(4)
        again = RunReport.from_dict(report.to_dict())
        assert again.kind == report.kind
        assert again.total_time == report.total_time
        np.testing.assert_array_equal(
            again.batch_displacement, report.batch_displacement
        )
        np.testing.assert_array_equal(again.cycle_jumps, report.cycle_jumps)
        assert again.sample_positions is None


class TestKac:
    def make_cycle_report(self, seed, n=500):
        # cycles with length L and sum s = 0.4 L + noise: the long-run
        # average of the summand is then 0.4 by construction
        rng = np.random.default_rng(seed)
        lengths = rng.integers(2, 30, size=n).astype(float)
        sums = 0.4 * lengths + rng.normal(0, 0.3, size=n)
        batch = np.full(50, (0.4 * lengths.sum()) / 50)
        report = make_report(
            batch,
            batch_duration=lengths.sum() / 50,
            cycles=(lengths, np.zeros(n), sums, np.zeros(n, dtype=bool)),
        )
        report.total_time = lengths.sum()
        report.displacement_sum = sums.sum()
        return report

    def test_identity_holds_on_synthetic_cycles(self):
        report = self.make_cycle_report(0)
        check = kac_check(report)
        assert abs(check.gap) <= 3 * check.stderr
        assert check.rel_gap < 0.05
        assert check.n_cycles == 500

    def test_detects_a_broken_identity(self):
        report = self.make_cycle_report(1)
        check = kac_check(report, f_time_average=0.6, f_time_stderr=1e-6)
        assert abs(check.gap) > 5 * check.stderr

    def test_needs_cycles(self):
        report = make_report(np.ones(50))
        with pytest.raises(errors.TooFewCycles):
            kac_check(report)

    def test_custom_sums_length_checked(self):
        report = self.make_cycle_report(2)
        with pytest.raises(errors.RelayError):
            kac_check(report, f_cycle_sums=np.ones(3))


class TestExcursions:
    def test_classification_and_deviation(self):
        disp = np.array([0.0, 10.0, 1e-12, 10.0 - 1e-12, 0.0])
        report = make_report(
            np.ones(50),
            cycles=(
                np.ones(5),
                disp,
                np.zeros(5),
                np.array([1, 0, 1, 0, 1], dtype=bool),
            ),
        )
        summary = excursion_classifier(report)
        assert summary.n_cycles == 5
        assert summary.wrap_count == 2
        assert summary.wrap_fraction == pytest.approx(0.4)
        assert summary.max_deviation == pytest.approx(1e-12, rel=1)

    def test_empty_raises(self):
        report = make_report(np.ones(50))
        with pytest.raises(errors.NoCycles):
            excursion_classifier(report)


class TestChiSquare:
    def test_uniform_data_passes(self):
        rng = np.random.default_rng(5)
        k = 4000
        pos = rng.uniform(0, 5, size=(k, 2))
        dirs = rng.choice([-1, 1], size=(k, 2))
        result = chi_square_uniformity(pos, dirs, 5.0, 5)
        assert result.dof == 10**2 - 1
        assert result.pvalue > 0.01

    def test_skewed_data_fails(self):
        rng = np.random.default_rng(6)
        k = 4000
        pos = rng.uniform(0, 2.5, size=(k, 2))  # half the ring only
        dirs = rng.choice([-1, 1], size=(k, 2))
        result = chi_square_uniformity(pos, dirs, 5.0, 5)
        assert result.pvalue < 1e-6

    def test_direction_skew_detected(self):
        rng = np.random.default_rng(7)
        k = 4000
        pos = rng.uniform(0, 5, size=(k, 2))
        dirs = rng.choice([-1, 1], size=(k, 2), p=[0.35, 0.65])
        result = chi_square_uniformity(pos, dirs, 5.0, 5)
        assert result.pvalue < 1e-6

    def test_sparse_cells_rejected(self):
        pos = np.zeros((100, 2))
        dirs = np.ones((100, 2))
        with pytest.raises(errors.TooFewSamples):
            chi_square_uniformity(pos, dirs, 5.0, 5)

    def test_false_positive_rate_near_nominal(self):
        # under the null the p-value is approximately uniform
        rng = np.random.default_rng(8)
        rejections = 0
        for _ in range(60):
            pos = rng.uniform(0, 1, size=(2000, 2))
            dirs = rng.choice([-1, 1], size=(2000, 2))
            if chi_square_uniformity(pos, dirs, 1.0, 4).pvalue <= 0.01:
                rejections += 1
        assert rejections <= 3

    def test_report_level_wiring(self):
        rng = np.random.default_rng(9)
        report = make_report(np.ones(50))
        report.sample_positions = rng.integers(0, 5, size=(3000, 2)).astype(float)
        report.sample_directions = rng.choice([-1, 1], size=(3000, 2))
        result = uniformity_test(report)
        assert result.n_samples == 3000
        assert result.dof == 100 - 1

    def test_report_without_samples_rejected(self):
        report = make_report(np.ones(50))
        with pytest.raises(errors.TooFewSamples):
            uniformity_test(report)
