import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ptisabb.model import AdcopInstance
from ptisabb.pseudo_tree import build_pseudo_tree

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("fast", max_examples=5, deadline=None)
settings.load_profile("default")


def random_tables(rng, di, dj, high=10):
    return rng.integers(0, high + 1, size=(di, dj)), rng.integers(0, high + 1, size=(dj, di))


@pytest.fixture
def four_agents():
    """Four agents a1..a4 as ids 0..3, edges 1-2, 1-3, 2-3, 2-4."""
    rng = np.random.default_rng(11)
    edges = [(0, 1), (0, 2), (1, 2), (1, 3)]
    inst = AdcopInstance((3, 3, 3, 3), {e: random_tables(rng, 3, 3) for e in edges})
    return inst, build_pseudo_tree(inst, root=0)


_acceptance = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and (report.when == "call" or report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        if report.when == "call" or name not in _acceptance:
            _acceptance[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance.items():
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{mark}] {name}")
