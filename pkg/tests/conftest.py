import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from crnoma.net_model import Scenario, generate_availability, generate_topology

settings.register_profile("crnoma", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("crnoma")


def instance(scenario, seed):
    rng = np.random.default_rng(seed)
    return generate_topology(scenario, rng), generate_availability(scenario, rng)


@pytest.fixture
def small():
    sc = Scenario(n_users=8, m_channels=6, availability_prob=0.7)
    topo, avail = instance(sc, 3)
    return sc, topo, avail


def fixed_topology(gains, m=None):
    """Topology from an (N, M) gain table, or per-user gains repeated on ``m`` channels."""
    from crnoma.net_model import Topology

    g = np.asarray(gains, dtype=float)
    if g.ndim == 1:
        g = np.repeat(g[:, None], m or 1, axis=1)
    n = g.shape[0]
    return Topology(np.zeros((n, 2)), np.ones(n), g.copy(), g)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(mod.RESULTS.items()):
            terminalreporter.write_line(line)
