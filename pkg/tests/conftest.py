import os
from functools import lru_cache

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile(
    "thorough", max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SLOW = os.environ.get("GDREACH_SLOW") == "1"


def pytest_collection_modifyitems(config, items):
    if SLOW:
        return
    skip = pytest.mark.skip(reason="full-horizon run; set GDREACH_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@lru_cache(maxsize=None)
def reach_cached(name: str, K: int, shrink_wrap=None, symbolic_remainders=None):
    """Reach results are expensive; share them between test modules."""
    from gdreach.config import load_scenario
    from gdreach.sys_reach import reach_system

    return reach_system(
        load_scenario(name), K=K, shrink_wrap=shrink_wrap, symbolic_remainders=symbolic_remainders
    )


@lru_cache(maxsize=None)
def sims_cached(name: str, K: int, n: int = 50):
    from gdreach.config import load_scenario
    from gdreach.sim import simulate_many

    return simulate_many(load_scenario(name), n, K)


def pytest_terminal_summary(terminalreporter):
    from _report import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
