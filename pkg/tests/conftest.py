import numpy as np
import pytest

from condrisk.prob import build_space, build_subalgebra


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_atoms():
    space = build_space([("a", 0.5), ("b", 0.5)])
    return space, build_subalgebra(space, [["a", "b"]])


@pytest.fixture
def four_atoms():
    space = build_space([(c, 0.25) for c in "abcd"])
    return space, build_subalgebra(space, [["a", "b"], ["c", "d"]])


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
