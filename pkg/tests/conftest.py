import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bmlab.spaces import NormedSpace

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

P_VALUES = [1.0, 1.5, 2.0, 3.0, 4.0, np.inf]


def all_kinds(dim=3, seed=0):
    """One space of every norm kind."""
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((dim, dim))
    v = rng.standard_normal((dim + 2, dim))
    return [
        NormedSpace.lp(1, dim),
        NormedSpace.lp(1.5, dim),
        NormedSpace.lp(2, dim),
        NormedSpace.lp(4, dim),
        NormedSpace.lp("inf", dim),
        NormedSpace.weighted_lp(3, rng.uniform(0.5, 2.0, dim)),
        NormedSpace.weighted_lp(1, rng.uniform(0.5, 2.0, dim)),
        NormedSpace.weighted_lp("inf", rng.uniform(0.5, 2.0, dim)),
        NormedSpace.polytope(np.vstack([v, -v])),
        NormedSpace.quadratic(b @ b.T + 0.5 * np.eye(dim)),
    ]


@pytest.fixture(params=range(10), ids=lambda i: ["l1", "l1.5", "l2", "l4", "linf", "wl3", "wl1",
                                                     "wlinf", "poly", "quad"][i])
def space3(request):
    return all_kinds(3)[request.param]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
