import numpy as np
import pytest

from gpt_thermo import make_classical, make_polygon

_ACCEPTANCE: list[tuple[int, bool, str]] = []


@pytest.fixture
def record():
    """Log one acceptance line; the summary is printed at the end of the run."""

    def _record(criterion: int, passed: bool, detail: str) -> bool:
        _ACCEPTANCE.append((criterion, bool(passed), detail))
        return bool(passed)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit, ok, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {crit:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def square():
    return make_polygon(4)


@pytest.fixture(scope="session")
def hexagon():
    return make_polygon(6)


@pytest.fixture(scope="session")
def bit():
    return make_classical(2)


def random_state(system, rng, alpha=0.7):
    return system.state(rng.dirichlet(np.full(system.n_vertices, alpha)))
