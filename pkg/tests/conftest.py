import numpy as np
import pytest

from zndstab.profile import ProfileRep
from zndstab.thermo import GasModel


@pytest.fixture(scope="session")
def gas():
    return GasModel()


@pytest.fixture(scope="session")
def rep(gas):
    return ProfileRep(gas)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Frequency near the turning point at infinity used for the block-form checks.
# The real-axis Riccati flow needs Re mu_{1,2}(inf) <= Re(zeta/u); this point
# sits on the neutral line Re zeta = 0.
BLOCK_OFFSET = 0.05j
BLOCK_H = 0.1


@pytest.fixture(scope="session")
def block_ref(rep):
    from zndstab import blockform as BF
    from zndstab import linsys as L
    z = L.zeta_inf(rep) + BLOCK_OFFSET
    bd = BF.riccati_solve(rep, z, BLOCK_H)
    return bd, BF.scalar_reduction(bd)
