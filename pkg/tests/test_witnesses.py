import math

import numpy as np
import pytest

from nmdeg import divisibility as dv
from nmdeg import evolution as ev
from nmdeg import generators as gen
from nmdeg import operators as ops
from nmdeg import witnesses as wit
from nmdeg.errors import DegenerateInputError, NotApplicableError

from helpers import random_density, random_hermitian, random_traceless_hermitian


class TestFlowLambda:
    def test_psd_witness_has_zero_flow(self, semigroup_traj, rng):
        g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        x = g @ g.conj().T
        series = wit.flow_profile(semigroup_traj, x, 1)
        assert np.abs(series.values).max() <= 1e-8

    def test_dephasing_sigma_x_closed_form(self):
        gamma = gen.ExpPolyRate((1.0, -1.0), 1.0)
        traj = ev.integrate(gen.dephasing_spec(gamma), ev.TimeGrid(4.0, 2000))
        ts = traj.times
        expected = -2.0 * np.asarray(gamma(ts)) * np.exp(-ts * np.exp(-ts))
        series = wit.flow_profile(traj, ops.SIGMA_X, 1)
        np.testing.assert_allclose(series.values[1:-1], expected[1:-1], atol=5e-5)
        assert wit.flow_lambda(traj, ops.SIGMA_X, 1, 500) == pytest.approx(
            expected[500], abs=1e-6
        )

    def test_semigroup_flows_never_positive(self, semigroup_traj, rng):
        for _ in range(20):
            x = random_hermitian(rng, 2)
            series = wit.flow_profile(semigroup_traj, x, 1)
            keep = ~series.kinks
            assert series.values[keep].max() <= 1e-8

    def test_extended_level_contraction_for_cp_divisible(self, semigroup_traj, rng):
        for _ in range(10):
            x = random_hermitian(rng, 4)
            series = wit.flow_profile(semigroup_traj, x, 2)
            keep = ~series.kinks
            assert series.values[keep].max() <= 1e-8


class TestNPlusMinus:
    def test_semigroup_no_positive_part(self, semigroup_traj, rng):
        x = random_traceless_hermitian(rng, 2)
        n_plus, n_minus = wit.n_plus_minus(semigroup_traj, x, 1)
        assert n_plus <= 1e-8
        assert n_minus >= 0.0

    def test_recoherence_closed_form(self, recoherence_traj):
        # norm of sigma_x follows 2 exp(-t e^{-t}); the increase part is
        # 2 (1 - e^{-1/e}) once the evolution runs to large times
        n_plus, n_minus = wit.n_plus_minus(recoherence_traj, ops.SIGMA_X, 1)
        expected = 2.0 * (1.0 - math.exp(-1.0 / math.e))
        assert n_plus == pytest.approx(expected, abs=1e-3)
        assert abs(n_minus - n_plus) <= 1e-4

    def test_budget_identity_telescopes(self, eternal_traj, rng):
        x = random_traceless_hermitian(rng, 2)
        n_plus, n_minus = wit.n_plus_minus(eternal_traj, x, 1)
        ext = wit.extended_maps(eternal_traj, 1)
        g = wit.norm_series_batch(ext, wit._vec_batch(x))[:, 0]
        assert n_plus - n_minus == pytest.approx(g[-1] - g[0], abs=1e-12)

    def test_decrease_dominates_increase(self, eternal_traj, essential_traj, rng):
        for traj in (eternal_traj, essential_traj):
            for k in (1, 2):
                x = random_traceless_hermitian(rng, 2 * k)
                n_plus, n_minus = wit.n_plus_minus(traj, x, k)
                assert n_plus <= n_minus + 1e-6

    def test_homogeneous_in_witness_scale(self, essential_traj, rng):
        x = random_traceless_hermitian(rng, 2)
        base = wit.n_plus_minus(essential_traj, x, 1)
        scaled = wit.n_plus_minus(essential_traj, 3.0 * x, 1)
        assert scaled[0] == pytest.approx(3.0 * base[0], rel=1e-10)
        assert scaled[1] == pytest.approx(3.0 * base[1], rel=1e-10)


class TestMeasure:
    def test_semigroup_measure_zero(self, semigroup_traj):
        est = wit.measure_mk(semigroup_traj, 1, restarts=8, seed=1, evals_per_restart=120)
        assert est.value <= 1e-6

    def test_recoherence_maximal(self, recoherence_traj):
        est = wit.measure_mk(recoherence_traj, 1, restarts=16, seed=42, evals_per_restart=300)
        assert est.value >= 0.99
        assert est.value <= 1.0 + 1e-6
        assert est.best.ratio == est.value
        # canonical gauge
        assert abs(np.trace(est.best.x)) < 1e-10
        assert ops.trace_norm(est.best.x) == pytest.approx(1.0, abs=1e-10)

    def test_ratio_invariant_under_scaling(self, essential_traj, rng):
        x = random_traceless_hermitian(rng, 2)
        ext = wit.extended_maps(essential_traj, 1)
        obj = wit._RatioObjective(essential_traj, 1)
        coords_basis = obj.basis_vecs
        coords = np.real(coords_basis.conj() @ ops.vec(x))
        r1 = obj(coords[None, :])[0]
        r2 = obj(5.0 * coords[None, :])[0]
        assert r1 == pytest.approx(r2, abs=1e-12)

    def test_hierarchy_with_warm_start(self, essential_traj):
        m1 = wit.measure_mk(essential_traj, 1, restarts=8, seed=3, evals_per_restart=150)
        embedded = wit.embed_witness(m1.best.x, 1, 2, 2)
        m2 = wit.measure_mk(
            essential_traj,
            2,
            restarts=4,
            seed=3,
            evals_per_restart=120,
            init_witnesses=[embedded],
        )
        assert m1.value <= m2.value + 2e-3
        assert m1.value > 0.01  # backflow exists for the degree-2 scenario

    def test_embedding_preserves_flows(self, essential_traj, rng):
        x = random_traceless_hermitian(rng, 2)
        x /= ops.trace_norm(x)
        big = wit.embed_witness(x, 1, 2, 2)
        n1 = wit.n_plus_minus(essential_traj, x, 1)
        n2 = wit.n_plus_minus(essential_traj, big, 2)
        assert n1[0] == pytest.approx(n2[0], abs=1e-10)
        assert n1[1] == pytest.approx(n2[1], abs=1e-10)

    def test_deterministic_under_seed(self, essential_traj):
        a = wit.measure_mk(essential_traj, 1, restarts=4, seed=9, evals_per_restart=60)
        b = wit.measure_mk(essential_traj, 1, restarts=4, seed=9, evals_per_restart=60)
        assert a.value == b.value
        np.testing.assert_array_equal(a.best.x, b.best.x)


class TestBlp:
    def test_semigroup_no_backflow(self, semigroup_traj, rng):
        r1 = random_density(rng, 2)
        r2 = random_density(rng, 2)
        for i in (1, 200, 600):
            assert wit.blp_sigma(semigroup_traj, r1, r2, i) <= 1e-8

    def test_dephasing_pair_closed_form(self):
        gamma = gen.SinusoidRate(1.0, 3.0)
        traj = ev.integrate(gen.dephasing_spec(gamma), ev.TimeGrid(3.0, 3000))
        r1 = 0.5 * (np.eye(2) + ops.SIGMA_X)
        r2 = 0.5 * (np.eye(2) - ops.SIGMA_X)
        ts = traj.times
        gam = np.asarray(gamma(ts))
        big = gen.cumulative_gamma_integral(gamma, ts)
        expected = -2.0 * gam * np.exp(-big)
        for i in (100, 800, 1900):
            got = wit.blp_sigma(traj, r1, r2, i)
            assert got == pytest.approx(expected[i], abs=1e-5)
            assert math.copysign(1.0, got) == -math.copysign(1.0, gam[i])

    def test_degenerate_pair_rejected(self, semigroup_traj, rng):
        rho = random_density(rng, 2)
        with pytest.raises(DegenerateInputError):
            wit.blp_sigma(semigroup_traj, rho, rho, 3)

    def test_pair_search_finds_backflow_for_essential(self, essential_traj):
        result = wit.blp_pair_search(essential_traj, restarts=12, seed=0)
        assert result.sigma_max > 1e-4
        assert 1.0 <= result.t <= 1.62  # inside the negative-sum window

    def test_pair_search_clean_for_eternal(self, eternal_traj):
        result = wit.blp_pair_search(eternal_traj, restarts=8, seed=0)
        assert result.sigma_max <= 1e-6


class TestEntropyMonitors:
    def test_maximally_mixed_flow_zero(self, eternal_traj):
        assert wit.entropy_flow(eternal_traj, np.eye(2) / 2, 100) == pytest.approx(0.0, abs=1e-10)

    def test_eternal_entropy_never_decreases(self, eternal_traj, rng):
        flows = wit.entropy_flow_series(
            eternal_traj,
            np.stack([random_density(rng, 2) for _ in range(100)]),
        )
        assert flows[1:-1].min() >= -1e-5

    def test_essential_scenario_has_entropy_decrease(self, essential_traj):
        found = wit.search_entropy_decrease(essential_traj, samples=200, seed=4)
        assert found.value < -1e-5
        assert 1.0 <= found.t <= 1.62

    def test_non_unital_rejected(self):
        traj = ev.integrate(
            gen.pump_decay_spec(gen.ConstantRate(0.2), gen.ConstantRate(1.0)),
            ev.TimeGrid(2.0, 200),
        )
        with pytest.raises(NotApplicableError):
            wit.entropy_flow(traj, np.eye(2) / 2, 10)

    def test_relative_entropy_equal_pair_zero(self, semigroup_traj, rng):
        rho = random_density(rng, 2, floor=0.1)
        for i in (1, 100, 400):
            assert wit.relative_entropy_flow(semigroup_traj, rho, rho, i) == pytest.approx(
                0.0, abs=1e-9
            )

    def test_relative_entropy_monotone_for_cp_divisible(self, semigroup_traj, rng):
        for _ in range(100):
            r1 = random_density(rng, 2)
            r2 = random_density(rng, 2, floor=0.05)
            series = wit.relative_entropy_series(semigroup_traj, r1, r2)
            flows, _ = wit.flows_from_norms(series, semigroup_traj.dt)
            assert np.nanmax(flows[1:-1]) <= 1e-5

    def test_relative_entropy_increase_found_for_essential(self, essential_traj):
        found = wit.search_relative_entropy_increase(essential_traj, pairs=40, seed=5)
        assert found.value > 1e-5

    def test_rank_deficient_second_argument_flagged(self):
        # pure decay sends states to the ground projector: log diverges
        traj = ev.integrate(
            gen.pump_decay_spec(gen.ConstantRate(0.0), gen.ConstantRate(3.0)),
            ev.TimeGrid(12.0, 1200),
        )
        rho1 = np.eye(2) / 2
        rho2 = np.diag([0.9, 0.1]).astype(complex)
        late = wit.relative_entropy_flow(traj, rho1, rho2, traj.n_nodes - 2, rank_tol=1e-10)
        assert math.isnan(late)


class TestTheoremOneProperty:
    def test_clean_scan_implies_contraction(self, eternal_traj, rng):
        # stepwise positivity certified at level 1 forces every level-1 flow
        # down to integration error
        steps = dv.scan_divisibility(eternal_traj, 1, budget=12, iterations=200, seed=0)
        assert all(not s.verdict.violated for s in steps)
        xs = np.stack([random_hermitian(rng, 2) for _ in range(100)])
        ext = wit.extended_maps(eternal_traj, 1)
        g = wit.norm_series_batch(ext, wit._vec_batch(xs))
        lam, kinks = wit.flows_from_norms(g, eternal_traj.dt)
        lam = np.where(kinks, -np.inf, lam)
        assert lam[1:-1].max() <= 1e-4
