import numpy as np
import pytest

from gibbstraj.models import PauliTerm, build_hamiltonian, ising3


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


@pytest.fixture(scope="session")
def ising_db():
    """Double-well instance used by the detailed-balance checks."""
    return ising3(2.0, 0.5, 0.25)


@pytest.fixture(scope="session")
def ising_est():
    """Instance used by the estimator checks."""
    return ising3(1.0, 0.5, 0.25)


@pytest.fixture(scope="session")
def two_qubit():
    return build_hamiltonian(2, [PauliTerm(-1.0, {0: "Z", 1: "Z"}), PauliTerm(-0.5, {0: "Z"}),
                                 PauliTerm(-0.3, {1: "X"})])


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion; lines are printed in the terminal summary."""

    def record(label: str, passed: bool, detail: str = "") -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
