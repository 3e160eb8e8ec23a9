import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from faddeev3d.masses import SPECTATOR_PAIR, MassSet
from faddeev3d.twobody import yamaguchi_potential, yamaguchi_strength_for_binding

M_PROTON = 938.272
M_NEUTRON = 939.565
M_NUCLEON = 938.9182  # average, used for the equal-mass benchmark
BETA = 230.0
E_B2 = 2.2246  # two-body binding energy the couplings are tuned to


def tuned_potentials(masses: MassSet, beta: float = BETA, e_b: float = E_B2):
    """Rank-1 Yamaguchi per pair, each tuned to the same two-body binding."""
    out = {}
    for i in (1, 2, 3):
        j, k = SPECTATOR_PAIR[i]
        mu = masses.mu(j, k)
        lam = yamaguchi_strength_for_binding(beta, mu, e_b)
        out[i] = yamaguchi_potential(beta, lam, mu, channel=f"pair{i}")
    return out


@pytest.fixture(scope="session")
def pnp_masses():
    return MassSet(M_PROTON, M_NEUTRON, M_PROTON)


@pytest.fixture(scope="session")
def equal_masses():
    return MassSet(M_NUCLEON, M_NUCLEON, M_NUCLEON)


@pytest.fixture(scope="session")
def asym_masses():
    return MassSet(650.0, 1100.0, 880.0)
