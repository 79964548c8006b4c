import numpy as np
import pytest

from nscale.potential import make_potential


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running Monte Carlo checks")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def cat(dim=1, n_scales=1, v1="cosine", v0="quadratic", **params):
    return make_potential({"dim": dim, "n_scales": n_scales, "V0": {"name": v0},
                           "V1": {"name": v1, "params": params}})
