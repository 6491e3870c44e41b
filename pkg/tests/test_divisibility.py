import numpy as np
import pytest

from nmdeg import divisibility as dv
from nmdeg import evolution as ev
from nmdeg import generators as gen
from nmdeg import operators as ops
from nmdeg.errors import BudgetError

from helpers import (
    random_kraus_channel,
    random_tp_hermiticity_preserving,
    transpose_superoperator,
)


class TestCompletePositivity:
    def test_identity_positive(self):
        v = dv.is_completely_positive(ops.Superoperator.identity(2))
        assert not v.violated
        assert v.floor == pytest.approx(0.0, abs=1e-12)

    def test_transposition_violated_floor_minus_one(self):
        # oracle: the Choi matrix of transposition is the swap, eigenvalues +/-1
        v = dv.is_completely_positive(ops.Superoperator(transpose_superoperator(2)))
        assert v.violated
        assert v.floor == pytest.approx(-1.0, abs=1e-12)
        assert v.certificate is not None

    def test_pauli_map_with_nonnegative_weights_positive(self, rng):
        p = rng.dirichlet(np.ones(4))
        m = sum(pa * np.kron(s.T, s) for pa, s in zip(p, ops.PAULI))
        assert not dv.is_completely_positive(ops.Superoperator(m)).violated

    def test_certificate_reproduces_floor(self, rng):
        m = random_tp_hermiticity_preserving(rng, 2)
        v = dv.is_completely_positive(ops.Superoperator(m))
        if v.violated:
            choi = ops.choi_matrix_of(m, 2)
            assert v.certificate.expectation(choi) == pytest.approx(v.floor, abs=1e-10)


class TestKPositivity:
    def test_full_level_agrees_with_exact_oracle(self, rng):
        mats = [
            random_kraus_channel(rng, 2) if i % 2 == 0 else random_tp_hermiticity_preserving(rng, 2)
            for i in range(200)
        ]
        chois = np.stack([ops.choi_matrix_of(m, 2) for m in mats])
        exact_floors = np.linalg.eigvalsh(chois)[:, 0]
        floors, _ = dv.min_schmidt_expectation(chois, 2, 2, budget=8, iterations=300, seed=0)
        tol = 1e-9
        np.testing.assert_array_equal(floors < -tol, exact_floors < -tol)
        # the search can never certify below the true minimum
        assert np.all(floors >= exact_floors - 1e-9)
        # spot-check the public entry point on a few channels
        for i in (0, 1, 7):
            phi = ops.Superoperator(mats[i])
            assert (
                dv.is_k_positive(phi, 2, budget=8, iterations=300, seed=i).status
                == dv.is_completely_positive(phi).status
            )

    def test_transposition_is_positive_at_level_one(self):
        # product expectations of the swap are |<a|conj(b)>|^2 >= 0
        phi = ops.Superoperator(transpose_superoperator(2))
        v = dv.is_k_positive(phi, 1, budget=16, seed=2)
        assert not v.violated
        assert v.floor >= -1e-12

    def test_certificates_are_exact(self, essential_traj):
        steps = dv.scan_divisibility(essential_traj, 1, budget=16, iterations=300, seed=5)
        found = [s for s in steps if s.verdict is not None and s.verdict.violated]
        assert found
        stack, _ = ev.adjacent_propagators(essential_traj)
        for s in found[:: max(1, len(found) // 10)]:
            choi = ops.choi_matrix_of(stack[s.index], 2)
            cert = s.verdict.certificate
            assert cert.expectation(choi) == pytest.approx(cert.value, abs=1e-10)
            assert cert.value < -1e-9
            # certified vectors are normalized and of Schmidt rank <= 1
            v = cert.vector.reshape(2, 2)
            assert np.linalg.norm(cert.vector) == pytest.approx(1.0, abs=1e-9)
            assert np.linalg.matrix_rank(v, tol=1e-7) == 1

    def test_budget_validation(self):
        with pytest.raises(BudgetError):
            dv.is_k_positive(ops.Superoperator.identity(2), 1, budget=0)


class TestScanDivisibility:
    def test_semigroup_clean_at_every_level(self, semigroup_traj):
        for k in (1, 2):
            steps = dv.scan_divisibility(semigroup_traj, k, budget=8, iterations=200, seed=1)
            assert all(s.verdict is not None and not s.verdict.violated for s in steps)

    def test_dephasing_violations_track_negative_rate(self):
        # rate (1 - t) e^{-t} is negative exactly for t > 1
        rate = gen.ExpPolyRate((1.0, -1.0), 1.0)
        traj = ev.integrate(gen.dephasing_spec(rate), ev.TimeGrid(4.0, 800))
        steps = dv.scan_divisibility(traj, 1, budget=12, iterations=300, seed=3)
        dt = traj.dt
        for s in steps:
            expect_bad = rate(s.t + 0.5 * dt) < 0
            within_grace = abs((s.t + 0.5 * dt) - 1.0) <= dt
            if within_grace:
                continue
            assert s.verdict.violated == expect_bad, f"at t={s.t}"

    def test_eternal_level_two_violated_level_one_clean(self, eternal_traj):
        dt = eternal_traj.dt
        steps2 = dv.scan_divisibility(eternal_traj, 2, seed=0)
        for s in steps2:
            if s.t > dt:
                assert s.verdict.violated
        steps1 = dv.scan_divisibility(eternal_traj, 1, budget=16, iterations=300, seed=0)
        assert all(not s.verdict.violated for s in steps1)

    def test_monotone_in_k(self, essential_traj):
        steps1 = dv.scan_divisibility(essential_traj, 1, budget=16, iterations=300, seed=7)
        steps2 = dv.scan_divisibility(essential_traj, 2, seed=7)
        for s1, s2 in zip(steps1, steps2):
            if s1.verdict is not None and s1.verdict.violated:
                assert s2.verdict.violated

    def test_skipped_steps_flagged_not_fatal(self):
        traj = ev.integrate(gen.dephasing_spec(gen.ConstantRate(5.0)), ev.TimeGrid(10.0, 1000))
        steps = dv.scan_divisibility(traj, 2, seed=0)
        skipped = [s for s in steps if s.skipped]
        assert skipped
        assert all(s.verdict is None for s in skipped)
        assert all(np.isfinite(s.condition_number) for s in steps if not s.skipped)


class TestNMD:
    def test_semigroup_markovian(self, semigroup_traj):
        rep = dv.nmd(semigroup_traj, budget=8, iterations=200, seed=1)
        assert rep.degree == 0
        assert rep.classification == "markovian"
        assert rep.per_k_divisible == {1: True, 2: True}

    def test_eternal_weakly_non_markovian(self, eternal_traj):
        rep = dv.nmd(eternal_traj, budget=16, iterations=300, seed=1)
        assert rep.degree == 1
        assert rep.classification == "weakly_non_markovian"
        assert rep.per_k_divisible == {1: True, 2: False}

    def test_essential_scenario_degree_two(self, essential_traj):
        rep = dv.nmd(essential_traj, budget=16, iterations=300, seed=1)
        assert rep.degree == 2
        assert rep.classification == "essentially_non_markovian"
        # violations confined to the negative-sum window, up to one grid step
        times1 = [t for t, k in rep.violation_times if k == 1]
        assert times1
        dt = essential_traj.dt
        assert min(times1) >= 1.0333 - 2 * dt
        assert max(times1) <= 1.5667 + 2 * dt

    def test_consistency_degree_classification(self, semigroup_traj, eternal_traj, essential_traj):
        for traj in (semigroup_traj, eternal_traj, essential_traj):
            rep = dv.nmd(traj, budget=8, iterations=200, seed=2)
            assert (rep.classification == "markovian") == (rep.degree == 0)
            assert (rep.classification == "essentially_non_markovian") == (
                rep.degree == traj.dim
            )
            ks = sorted(rep.per_k_divisible)
            for a, b in zip(ks, ks[1:]):
                if not rep.per_k_divisible[a]:
                    assert not rep.per_k_divisible[b]


class TestAdmission:
    def test_legitimate_models_admitted(self, semigroup_traj, eternal_traj, essential_traj):
        for traj in (semigroup_traj, eternal_traj, essential_traj):
            assert dv.admit_trajectory(traj, tol=1e-8).legitimate

    def test_illegitimate_pump_decay_rejected(self):
        # constant negative pumping keeps the rate sum positive but breaks
        # the legitimacy integrals, hence complete positivity of the map
        gp = gen.ConstantRate(-1.0)
        gm = gen.ConstantRate(2.0)
        crit = dv.pump_decay_criteria(gp, gm, 1.0)
        assert crit.p_div and not crit.legit_integrals
        traj = ev.integrate(gen.pump_decay_spec(gp, gm), ev.TimeGrid(2.0, 400))
        report = dv.admit_trajectory(traj, tol=1e-8)
        assert not report.legitimate
        assert report.choi_floor < -1e-4


class TestPauliCriteria:
    def test_all_nonnegative(self):
        one = gen.ConstantRate(1.0)
        crit = dv.pauli_criteria(one, one, one, 0.5)
        assert crit.cp and crit.p and crit.volume

    def test_eternal_rates(self):
        g1 = gen.ConstantRate(1.0)
        g3 = gen.TanhRate(-1.0)
        for t in (0.5, 2.0, 8.0):
            crit = dv.pauli_criteria(g1, g1, g3, t)
            assert not crit.cp  # third rate negative
            assert crit.p      # pairwise sums 1 - tanh and 2 stay nonnegative
            assert crit.volume

    def test_volume_strictly_weaker_than_p(self):
        crit = dv.pauli_criteria(
            gen.ConstantRate(3.0), gen.ConstantRate(1.0), gen.ConstantRate(-2.5), 0.0
        )
        assert not crit.cp
        assert not crit.p       # 1 - 2.5 < 0
        assert crit.volume      # 3 + 1 - 2.5 >= 0


class TestPumpDecayCriteria:
    def test_equal_unit_rates(self):
        one = gen.ConstantRate(1.0)
        crit = dv.pump_decay_criteria(one, one, 3.0)
        assert crit.legit_integrals and crit.cp_div and crit.p_div

    def test_negative_pumping_interval(self):
        # gamma_plus dips to -0.5 on [1, 2] while gamma_minus stays at 1
        gp = gen.TabulatedRate((0.0, 1.0, 1.1, 1.9, 2.0, 4.0), (0.0, 0.0, -0.5, -0.5, 0.0, 0.0))
        gm = gen.ConstantRate(1.0)
        before = dv.pump_decay_criteria(gp, gm, 0.5)
        assert before.legit_integrals and before.cp_div and before.p_div
        mid = dv.pump_decay_criteria(gp, gm, 1.5)
        assert not mid.cp_div
        assert mid.p_div  # sum 0.5 >= 0
        # the negative pumping window breaks the legitimacy integral for good,
        # so stepwise positivity alone does not make the map legitimate
        after = dv.pump_decay_criteria(gp, gm, 3.0)
        assert after.p_div and not after.legit_integrals
        traj = ev.integrate(gen.pump_decay_spec(gp, gm), ev.TimeGrid(3.0, 600))
        assert not dv.admit_trajectory(traj, tol=1e-8).legitimate
