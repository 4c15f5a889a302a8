import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from oracles import rho_scalar
from swarm_anneal.density import DensityParams
from swarm_anneal.potentials import DOUBLE_WELL
from swarm_anneal.transport import (
    TransportPlan,
    WeightedSample,
    barycentric_velocity,
    effective_sample_size,
    gibbs_importance_weights,
    importance_weights,
    importance_weights_from_energies,
    solve_discrete_ot,
)
from swarm_anneal.validation import vertex_enumeration_ot


def feasibility(G, w):
    n = len(w)
    return max(np.abs(G.sum(1) - 1).max(), np.abs(G.sum(0) - n * np.asarray(w)).max(), max(0.0, -G.min()))


class TestWeights:
    def test_same_params_uniform(self):
        p = DensityParams(2.0, 3.0, 0.5)
        w = importance_weights(np.linspace(-5, 5, 7)[:, None], DOUBLE_WELL, p, p)
        np.testing.assert_allclose(w, np.full(7, 1 / 7), rtol=1e-14)

    def test_two_particle_oracle(self):
        r_now = [rho_scalar(2, 1, 0, u) for u in (0.0, 1.0)]
        r_next = [rho_scalar(2, 2, 0, u) for u in (0.0, 1.0)]
        ratio = np.array(r_next) / np.array(r_now)
        expected = ratio / ratio.sum()
        w = importance_weights_from_energies([0.0, 1.0], DensityParams(2, 1, 0), DensityParams(2, 2, 0))
        np.testing.assert_allclose(w, expected, rtol=1e-12)
        # frozen from the bisection oracle
        np.testing.assert_allclose(w, [0.61722422, 0.38277578], rtol=1e-7)

    def test_gibbs_variant(self):
        u = np.array([0.0, 1.0, 3.0])
        w = gibbs_importance_weights(u, 0.25, 0.75)
        ref = np.exp(-0.5 * u)
        np.testing.assert_allclose(w, ref / ref.sum(), rtol=1e-14)

    def test_huge_ratio_stays_finite(self):
        u = np.array([0.0, 50.0, 500.0])
        w = gibbs_importance_weights(u, 1.0, 1001.0)
        assert w[0] == 1.0 and w.sum() == 1.0
        w2 = importance_weights_from_energies(u, DensityParams(2, 1, 0), DensityParams(2, 900, 0))
        assert np.all(np.isfinite(w2)) and w2[0] == pytest.approx(1.0)

    def test_mismatched_params(self):
        with pytest.raises(ValueError):
            importance_weights_from_energies([1.0], DensityParams(2, 1), DensityParams(3, 1))

    def test_m_to_one_matches_gibbs(self):
        # kappa=2 density at m = 1 + 1e-4 approaches exp(-beta (u - C)); C fixed.
        # The gap grows like eps (beta (u - C))^2, so use a Gibbs-distributed sample.
        rng = np.random.default_rng(5)
        x = rng.uniform(-8, 8, size=200_000)
        x = x[rng.random(x.size) < np.exp(-DOUBLE_WELL(x))][:100]
        u = DOUBLE_WELL(x)
        m = 1 + 1e-4
        w_csg = importance_weights_from_energies(u, DensityParams(m, 1.0, 0.5, 2), DensityParams(m, 1.2, 0.5, 2))
        w_csa = gibbs_importance_weights(u, 1.0, 1.2)
        np.testing.assert_allclose(w_csg, w_csa, rtol=1e-3)


def test_weighted_sample_contract():
    WeightedSample(np.zeros((3, 1)), np.array([0.2, 0.3, 0.5]))
    with pytest.raises(ValueError):
        WeightedSample(np.zeros((2, 1)), np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        WeightedSample(np.array([[np.nan], [0.0]]), np.array([0.5, 0.5]))


class TestSolve:
    def test_uniform_is_identity(self):
        x = np.array([[0.0, 1.0], [2.0, -1.0], [0.5, 0.5]])
        plan = solve_discrete_ot(x, np.full(3, 1 / 3))
        np.testing.assert_allclose(plan.G, np.eye(3), atol=1e-12)
        assert plan.cost == pytest.approx(0.0, abs=1e-12)

    def test_forced_two_point_plan(self):
        plan = solve_discrete_ot(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
        np.testing.assert_allclose(plan.G, [[0, 1], [0, 1]], atol=1e-12)
        assert plan.cost == pytest.approx(1.0)

    def test_three_point_vertex_enumeration(self):
        x = np.array([0.0, 1.0, 2.0])
        w = np.array([0.5, 0.5, 0.0])
        plan = solve_discrete_ot(x, w)
        assert plan.cost == pytest.approx(vertex_enumeration_ot(x, w), abs=1e-12)
        # x=2 moves to x=1, which sends half its mass on to x=0
        assert plan.cost == pytest.approx(1.5, abs=1e-12)

    def test_single_point(self):
        plan = solve_discrete_ot(np.array([[3.0]]), np.array([1.0]))
        assert plan.G.shape == (1, 1) and plan.cost == 0.0

    @pytest.mark.parametrize("w", [[0.5, 0.6], [1.2, -0.2], [1.0]])
    def test_bad_weights(self, w):
        with pytest.raises(ValueError):
            solve_discrete_ot(np.array([0.0, 1.0]), np.array(w))

    @settings(max_examples=150, deadline=None)
    @given(st.integers(1, 4), st.integers(1, 2), st.integers(0, 2**31), st.lists(st.integers(0, 4), min_size=4, max_size=4))
    def test_optimal_against_vertex_enumeration(self, n, d, seed, nums):
        nums = np.array(nums[:n], dtype=float)
        if nums.sum() == 0:
            nums[0] = 1
        w = nums / nums.sum()
        x = np.random.default_rng(seed).normal(size=(n, d))
        plan = solve_discrete_ot(x, w)
        assert abs(plan.cost - vertex_enumeration_ot(x, w)) <= 1e-9
        assert feasibility(plan.G, w) <= 1e-9

    def test_duplicates_allowed(self):
        x = np.array([[0.0], [0.0], [1.0]])
        plan = solve_discrete_ot(x, np.array([0.0, 0.5, 0.5]))
        assert feasibility(plan.G, [0.0, 0.5, 0.5]) <= 1e-12
        assert plan.cost == pytest.approx(vertex_enumeration_ot(x, [0.0, 0.5, 0.5]), abs=1e-12)

    @pytest.mark.parametrize("n", [50, 500, 2000])
    def test_feasibility_large(self, n):
        rng = np.random.default_rng(n)
        w = rng.random(n)
        w /= w.sum()
        plan = solve_discrete_ot(rng.normal(size=(n, 2)), w)
        assert feasibility(plan.G, w) <= 1e-9

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(2)
        n = 30
        x = rng.normal(size=(n, 2))
        w = rng.random(n)
        w /= w.sum()
        perm = rng.permutation(n)
        a = solve_discrete_ot(x, w)
        b = solve_discrete_ot(x[perm], w[perm])
        assert a.cost == pytest.approx(b.cost, rel=1e-12)
        # with generic continuous data the optimum is unique, so the plans match
        np.testing.assert_allclose(b.G, a.G[np.ix_(perm, perm)], atol=1e-9)
        np.testing.assert_allclose(
            barycentric_velocity(b, x[perm], 0.1), barycentric_velocity(a, x, 0.1)[perm], atol=1e-8
        )

    def test_deterministic(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(40, 1))
        w = np.full(40, 1 / 40)
        w[:10] = 0
        w /= w.sum()
        assert np.array_equal(solve_discrete_ot(x, w).G, solve_discrete_ot(x, w).G)


class TestVelocity:
    def test_identity_plan(self):
        x = np.arange(6.0).reshape(3, 2)
        np.testing.assert_array_equal(barycentric_velocity(TransportPlan(np.eye(3), 0.0), x, 0.04), 0.0)

    def test_forced_plan(self):
        plan = solve_discrete_ot(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
        v = barycentric_velocity(plan, np.array([0.0, 1.0]), 0.5)
        np.testing.assert_allclose(v[:, 0], [2.0, 0.0], atol=1e-12)

    def test_bad_h(self):
        with pytest.raises(ValueError):
            barycentric_velocity(TransportPlan(np.eye(1), 0.0), np.zeros((1, 1)), 0.0)

    @staticmethod
    def _shift_weights(x, delta):
        # N(delta, 1) over N(0, 1)
        logw = -0.5 * (x[:, 0] - delta) ** 2 + 0.5 * x[:, 0] ** 2
        w = np.exp(logw - logw.max())
        return w / w.sum()

    def test_translation_stratified(self):
        # normal quantiles: a 200-point sample without Monte-Carlo noise in its mean
        x = norm.ppf((np.arange(200) + 0.5) / 200)[:, None]
        delta, h = 0.2, 0.04
        v = barycentric_velocity(solve_discrete_ot(x, self._shift_weights(x, delta)), x, h)
        assert v.mean() == pytest.approx(delta / h, rel=0.15)

    def test_translation_random_sample(self):
        # the mean velocity is (weighted mean - mean) / h whatever the plan, so
        # compare it to its own importance-sampling standard error
        rng = np.random.default_rng(1234)
        x = rng.normal(size=(200, 1))
        delta, h = 0.2, 0.04
        w = self._shift_weights(x, delta)
        v = barycentric_velocity(solve_discrete_ot(x, w), x, h)
        assert v.mean() == pytest.approx((w @ x[:, 0] - x.mean()) / h, rel=1e-9)
        se = np.sqrt(np.sum(w**2 * (x[:, 0] - w @ x[:, 0]) ** 2)) / h
        assert abs(v.mean() - delta / h) <= 3 * se


def test_ess():
    assert effective_sample_size(np.full(100, 0.01)) == pytest.approx(100)
    assert effective_sample_size(np.eye(5)[0]) == 1.0
    assert effective_sample_size([0.5, 0.5, 0, 0]) == 2.0
