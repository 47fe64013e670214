import pytest

from fracdfrt.analysis import IntegerStates, solve_integer_states
from fracdfrt.grid_model import Grid, ModelSystem, PotentialParams, get_preset

_acceptance_lines: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion:2d}: {detail}"
    _acceptance_lines.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance():
    return record


@pytest.fixture(scope="session")
def system_a() -> ModelSystem:
    return get_preset("paper-A").system()


@pytest.fixture(scope="session")
def system_b() -> ModelSystem:
    return get_preset("paper-B").system()


@pytest.fixture(scope="session")
def states_a(system_a) -> IntegerStates:
    return solve_integer_states(system_a)


@pytest.fixture(scope="session")
def states_b(system_b) -> IntegerStates:
    return solve_integer_states(system_b)


@pytest.fixture(scope="session")
def small_system() -> ModelSystem:
    """Coarse paper-A-like system whose 2e problem fits the dense solver."""
    return ModelSystem(Grid(-6.0, 6.0, 41), PotentialParams(0.0, 9.0, 0.5, 0.0, 0.0), 1.0, 0.35)


@pytest.fixture(scope="session")
def small_states(small_system) -> IntegerStates:
    return solve_integer_states(small_system)
