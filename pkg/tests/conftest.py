import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nmdeg import evolution as ev
from nmdeg import generators as gen


@pytest.fixture(scope="session")
def semigroup_traj():
    """Constant-rate three-channel qubit semigroup (Markovian reference)."""
    spec = gen.pauli_spec(gen.ConstantRate(0.6), gen.ConstantRate(0.6), gen.ConstantRate(0.6))
    return ev.integrate(spec, ev.TimeGrid(t_max=4.0, steps=800))


@pytest.fixture(scope="session")
def eternal_traj():
    """Rates (1, 1, -tanh t): stepwise positive forever, never CP-divisible."""
    spec = gen.pauli_spec(gen.ConstantRate(1.0), gen.ConstantRate(1.0), gen.TanhRate(-1.0))
    return ev.integrate(spec, ev.TimeGrid(t_max=5.0, steps=2000))


ESSENTIAL_KNOTS = ((0.0, 1.0, 1.05, 1.55, 1.6, 3.0), (0.0, 0.0, -1.5, -1.5, 0.0, 0.0))


@pytest.fixture(scope="session")
def essential_rates():
    bump = gen.TabulatedRate(*ESSENTIAL_KNOTS)
    return gen.ConstantRate(1.0), gen.ConstantRate(1.0), bump


@pytest.fixture(scope="session")
def essential_traj(essential_rates):
    """Pairwise rate sum dips below zero on [1.03, 1.57]: not even P-divisible."""
    spec = gen.pauli_spec(*essential_rates)
    return ev.integrate(spec, ev.TimeGrid(t_max=3.0, steps=1200))


@pytest.fixture(scope="session")
def recoherence_traj():
    """Dephasing with rate (1 - t) e^{-t}: the norm of sigma_x fully recovers."""
    spec = gen.dephasing_spec(gen.ExpPolyRate((1.0, -1.0), 1.0))
    return ev.integrate(spec, ev.TimeGrid(t_max=30.0, steps=4000))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260809)
