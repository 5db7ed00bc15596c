"""Exact finite-state machinery, checked against independent oracles.

Oracles here avoid the production code paths entirely: stationary laws
come from repeated squaring of the dense transition matrix, hitting
probabilities and mean return times from their own dense linear solves,
and a couple of small cases were worked by hand (N=3 with a fair flip
gives a wrap probability of exactly 1/3).
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ringrelay import closed_form as cf
from ringrelay import errors, exact
from ringrelay.model import ContinuousConfig

EPS_GRID = (0.05, 0.3, 0.5, 0.9)


def dense_stationary_by_powers(chain: exact.ReducedChain) -> np.ndarray:
    p = chain.transition.toarray()
    for _ in range(60):  # P^(2^60) is stationary to double precision
        p = p @ p
        p /= p.sum(axis=1, keepdims=True)
    return p[0]


class TestReducedChain:
    @pytest.mark.parametrize("n", [3, 5, 11])
    def test_state_count(self, n):
        chain = exact.build_reduced_chain(n, 0.3)
        assert chain.n_states == 8 * n - 2

    def test_excluded_states_absent(self):
        chain = exact.build_reduced_chain(5, 0.3)
        assert (0, -1, 1, 0) not in chain.index
        assert (0, 1, -1, 1) not in chain.index
        assert (0, 1, -1, 0) in chain.index
        assert (0, -1, 1, 1) in chain.index

    @pytest.mark.parametrize("n", [3, 7])
    @pytest.mark.parametrize("eps", EPS_GRID)
    def test_rows_are_stochastic(self, n, eps):
        chain = exact.build_reduced_chain(n, eps)
        rows = np.asarray(chain.transition.sum(axis=1)).ravel()
        np.testing.assert_allclose(rows, 1.0, atol=1e-14)
        assert chain.transition.min() >= 0

    @pytest.mark.parametrize("n", [3, 5, 11])
    @pytest.mark.parametrize("eps", EPS_GRID)
    def test_stationary_matches_matrix_powers(self, n, eps):
        chain = exact.build_reduced_chain(n, eps)
        pi = exact.stationary(chain)
        oracle = dense_stationary_by_powers(chain)
        np.testing.assert_allclose(pi, oracle, atol=1e-12)

    @pytest.mark.parametrize("n", [3, 5, 11])
    @pytest.mark.parametrize("eps", EPS_GRID)
    def test_position_direction_marginal_is_uniform(self, n, eps):
        # summing out the carrier must leave the uniform law on
        # (gap, d1, d2): each cell carries exactly 1/(4N)
        chain = exact.build_reduced_chain(n, eps)
        pi = exact.stationary(chain)
        marginal = {}
        for state, idx in chain.index.items():
            key = state[:3]
            marginal[key] = marginal.get(key, 0.0) + pi[idx]
        assert len(marginal) == 4 * n
        np.testing.assert_allclose(
            sorted(marginal.values()), 1.0 / (4 * n), atol=1e-12
        )

    def test_speed_small_case_by_hand(self):
        # N=3, fair flip: s = (1-eps)/(2(1+eps)) = 1/6
        assert exact.exact_speed(3, 0.5) == pytest.approx(1 / 6, abs=1e-12)

    @pytest.mark.parametrize("n", [3, 5, 25])
    @pytest.mark.parametrize("eps", EPS_GRID)
    def test_metrics_match_closed_forms(self, n, eps):
        m = exact.exact_metrics(n, eps)
        assert m.speed == pytest.approx(cf.speed_discrete(n, eps), abs=1e-12)
        assert m.cost == pytest.approx(cf.cost_discrete(n, eps), abs=1e-12)
        assert m.residual < 1e-12

    def test_mean_return_time_is_twice_n(self):
        # independent oracle: dense first-passage solve back to the
        # post-handoff contact states; Kac then forces E(T) = 2N
        for n, eps in [(3, 0.5), (5, 0.3), (7, 0.8)]:
            chain = exact.build_reduced_chain(n, eps)
            p = chain.transition.toarray()
            regen = [chain.index[(0, 1, -1, 0)], chain.index[(0, -1, 1, 1)]]
            mask = np.ones(chain.n_states, dtype=bool)
            mask[regen] = False
            q = p[np.ix_(mask, mask)]
            # expected steps to reach the contact set from each state
            t_hit = np.linalg.solve(np.eye(q.shape[0]) - q, np.ones(q.shape[0]))
            full = np.zeros(chain.n_states)
            full[mask] = t_hit
            for s in regen:
                ret = 1.0 + p[s] @ full
                assert ret == pytest.approx(2 * n, rel=1e-12)

    def test_rejects_bad_parameters(self):
        with pytest.raises(errors.EvenN):
            exact.build_reduced_chain(6, 0.3)
        with pytest.raises(errors.EpsilonOutOfRange):
            exact.build_reduced_chain(5, 1.0)


class TestTraceBvp:
    def test_hand_solved_case(self):
        sol = exact.solve_trace_bvp(3, 0.5)
        assert sol.crossing_prob == pytest.approx(1 / 3, abs=1e-14)
        np.testing.assert_allclose(sol.f, [1 / 3, 2 / 3, 1.0], atol=1e-14)
        np.testing.assert_allclose(sol.g, [-1 / 3, 0.0, 1 / 3], atol=1e-14)

    @pytest.mark.parametrize("n", [3, 5, 11, 101])
    @pytest.mark.parametrize("eps", EPS_GRID)
    def test_three_routes_agree(self, n, eps):
        sol = exact.solve_trace_bvp(n, eps)
        a = sol.crossing_prob
        assert a == pytest.approx(exact.hitting_prob_oracle(n, eps), abs=1e-12)
        assert a == pytest.approx((1 - eps) / (1 + eps * (n - 2)), abs=1e-12)
        assert exact.exact_speed(n, eps) == pytest.approx(a / 2, abs=1e-12)

    @pytest.mark.parametrize("n", [3, 5, 11])
    @pytest.mark.parametrize("eps", EPS_GRID)
    def test_difference_is_constant(self, n, eps):
        # f(k) - g(k) is independent of k and equals the wrap probability
        sol = exact.solve_trace_bvp(n, eps)
        diffs = [sol.f_at(k) - sol.g_at(k) for k in range(n - 1)]
        np.testing.assert_allclose(diffs, sol.crossing_prob, atol=1e-12)

    def test_boundary_values(self):
        sol = exact.solve_trace_bvp(7, 0.25)
        assert sol.g_at(0) == pytest.approx(0.0, abs=1e-14)
        assert sol.f_at(6) == pytest.approx(1.0, abs=1e-14)
        # the formal k=-1 value that closes the recursion
        a = sol.crossing_prob
        assert sol.g_at(-1) == pytest.approx(-a * 0.25 / 0.75, abs=1e-12)

    def test_residual_small(self):
        for n, eps in [(3, 0.5), (11, 0.1), (101, 0.9)]:
            assert exact.bvp_residual(exact.solve_trace_bvp(n, eps)) < 1e-12

    def test_crossing_prob_decreasing_in_eps(self):
        vals = [exact.solve_trace_bvp(9, e).crossing_prob for e in EPS_GRID]
        assert all(a > b for a, b in zip(vals, vals[1:]))


class TestPotentials:
    CFG = ContinuousConfig(1.0, 1.0, 1.0)

    def test_h_frozen_example(self):
        state = exact.Phi2State(0.25, 1, 1, 0)
        assert exact.H_value(state, self.CFG) == pytest.approx(0.59375, abs=1e-15)

    def test_h_on_contact_set(self):
        state = exact.Phi2State(0.0, 1, -1, 0)
        assert exact.H_value(state, self.CFG) == pytest.approx(-0.5, abs=1e-15)

    def test_v_frozen_example(self):
        state = exact.Phi2State(0.5, 1, -1, 0)
        assert exact.V_value(state, self.CFG) == pytest.approx(2.5 / 3, abs=1e-15)

    def test_v_undefined_on_contact_set(self):
        with pytest.raises(errors.StateInF):
            exact.V_value(exact.Phi2State(0.0, 1, -1, 0), self.CFG)

    def test_v_is_a_probability(self):
        cfg = ContinuousConfig(2.0, 1.3, 0.7)
        rng = np.random.default_rng(0)
        for _ in range(200):
            state = exact.Phi2State(
                float(rng.uniform(1e-6, 2.0 - 1e-6)),
                int(1 - 2 * rng.integers(2)),
                int(1 - 2 * rng.integers(2)),
                int(rng.integers(2)),
            )
            assert 0.0 <= exact.V_value(state, cfg) <= 1.0

    @given(
        gap=st.floats(min_value=1e-3, max_value=0.999),
        d1=st.sampled_from([1, -1]),
        d2=st.sampled_from([1, -1]),
        carrier=st.sampled_from([0, 1]),
    )
    def test_relabel_invariance(self, gap, d1, d2, carrier):
        # swapping walker labels flips the gap and the carrier index but
        # must leave both potentials unchanged
        cfg = self.CFG
        state = exact.Phi2State(gap, d1, d2, carrier)
        swapped = exact.Phi2State(
            (cfg.circumference - gap) % cfg.circumference, d2, d1, 1 - carrier
        )
        assert exact.H_value(state, cfg) == pytest.approx(
            exact.H_value(swapped, cfg), rel=1e-12
        )
        assert exact.V_value(state, cfg) == pytest.approx(
            exact.V_value(swapped, cfg), rel=1e-12
        )


class TestGenerator:
    def test_known_value_on_smooth_function(self):
        # f(x, d) = d1 sin(2 pi x1): drift gives 2 pi v cos(2 pi x1),
        # switching gives -2 r d1 sin(2 pi x1); at x1 = 0 only the drift
        # survives
        cfg = ContinuousConfig(1.0, 1.0, 1.0)

        def f(x, d, _i):
            return d[0] * np.sin(2 * np.pi * x[0])

        got = exact.apply_generator(
            f, np.array([0.0, 0.4]), np.array([1, -1]), 0, cfg
        )
        assert got == pytest.approx(2 * np.pi, rel=1e-5)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_identities_with_analytic_partials(self, seed):
        rng = np.random.default_rng(seed)
        cfg = ContinuousConfig(
            float(rng.uniform(0.5, 4.0)),
            float(rng.uniform(0.5, 2.0)),
            float(rng.uniform(0.3, 2.0)),
        )
        h_func, h_part = exact.h_field(cfg)
        v_func, v_part = exact.v_field(cfg)
        for _ in range(50):
            x1 = rng.uniform(0, cfg.circumference)
            gap = rng.uniform(0.01, 0.99) * cfg.circumference
            x = np.array([x1, (x1 - gap) % cfg.circumference])
            d = 1 - 2 * rng.integers(0, 2, size=2)
            carrier = int(rng.integers(2))
            lh = exact.apply_generator(h_func, x, d, carrier, cfg, h_part)
            lv = exact.apply_generator(v_func, x, d, carrier, cfg, v_part)
            assert lh == pytest.approx(-1.0, abs=1e-12)
            assert lv == pytest.approx(0.0, abs=1e-12)

    def test_finite_differences_agree_with_partials(self):
        cfg = ContinuousConfig(2.0, 1.1, 0.9)
        h_func, h_part = exact.h_field(cfg)
        rng = np.random.default_rng(3)
        for _ in range(20):
            x1 = rng.uniform(0, 2.0)
            gap = rng.uniform(0.1, 1.9)
            x = np.array([x1, (x1 - gap) % 2.0])
            d = 1 - 2 * rng.integers(0, 2, size=2)
            analytic = exact.apply_generator(h_func, x, d, 0, cfg, h_part)
            numeric = exact.apply_generator(h_func, x, d, 0, cfg)
            assert numeric == pytest.approx(analytic, abs=1e-6)

    def test_pair_state_roundtrip(self):
        cfg = ContinuousConfig(2.0)
        state = exact.pair_state(
            np.array([0.3, 1.8]), np.array([1, -1]), 1, cfg
        )
        assert state.gap == pytest.approx(0.5)
        assert (state.d1, state.d2, state.carrier) == (1, -1, 1)
