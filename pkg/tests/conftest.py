import itertools

import numpy as np
import pytest

from thetamul.avcore import PolarizationType, validate_period_matrix
from thetamul.experiments import random_siegel

ACCEPTANCE_LINES = []


def direct_theta(a, b, z, tau, N=12):
    """Brute-force theta[a;b](z, tau) over the box |n_i| <= N (test oracle)."""
    tau = np.asarray(tau, dtype=complex)
    g = tau.shape[0]
    a, b, z = (np.asarray(x, dtype=complex) for x in (a, b, z))
    total = 0j
    for n in itertools.product(range(-N, N + 1), repeat=g):
        v = np.array(n) + a
        total += np.exp(1j * np.pi * v @ tau @ v + 2j * np.pi * v @ (z + b))
    return total


@pytest.fixture
def tau_i1():
    return validate_period_matrix([[1j]])


@pytest.fixture
def tau_diag2():
    return validate_period_matrix(np.diag([1j, 1j]))


@pytest.fixture
def generic_tau2():
    return random_siegel(2, 11)


def D(*d):
    return PolarizationType(d)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
