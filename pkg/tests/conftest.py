import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def chain_corr(p):
    """Correlation matrix and standardized precision of the 0.5-chain model."""
    theta = np.eye(p) + 0.5 * (np.eye(p, k=1) + np.eye(p, k=-1))
    sigma = np.linalg.inv(theta)
    d = np.sqrt(np.diag(sigma))
    return sigma / np.outer(d, d), theta * np.outer(d, d)


TOY_A = np.array([[1.0, 0.7, 0.0], [0.7, 1.0, 0.7], [0.0, 0.7, 1.0]])


ACCEPTANCE_LINES = []


def report(number, title, ok, detail):
    """Record one acceptance line; printed in the terminal summary."""
    ACCEPTANCE_LINES.append("criterion %2d %-4s %s: %s" % (number, "PASS" if ok else "FAIL",
                                                          title, detail))
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
