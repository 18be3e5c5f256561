import numpy as np
import pytest

from phnls.field import DomainConfig
from phnls.harness.checks import Context


@pytest.fixture(scope="session")
def ctx(tmp_path_factory):
    """One fixture context for the whole session.

    The acceptance tests share the expensive artifacts (ground-state pair,
    the two dichotomy runs) through this, exactly like a `phnls verify` pass.
    """
    return Context(work_dir=str(tmp_path_factory.mktemp("verify")))


@pytest.fixture(scope="session")
def small_domain():
    return DomainConfig(d=1, L=16.0, N_x=256, n_max=16, q=32, alpha=5.0, omega=1.0)


@pytest.fixture(scope="session")
def tiny_domain():
    # coarse everywhere: for tests that only exercise plumbing, not accuracy
    return DomainConfig(d=1, L=16.0, N_x=128, n_max=8, q=16, alpha=5.0, omega=1.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
