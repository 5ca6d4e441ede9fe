import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from poisson_exit.levy_model import LevyModel
from poisson_exit.scale_functions import ScaleContext

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

M1 = LevyModel.cramer_lundberg(1.2, 1.0, 1.0)
M2 = LevyModel.brownian(1.0, 2.0)
Q_GRID = (0.0, 0.01, 0.05, 1.0, 2.0, 10.0)


@pytest.fixture
def m1():
    return M1


@pytest.fixture
def m2():
    return M2


@pytest.fixture(params=["m1", "m2"])
def model(request):
    return {"m1": M1, "m2": M2}[request.param]


def ctx(model, q=0.0):
    return ScaleContext(model, q)


def cl_roots(c, nu, eta, q):
    """(Phi_q, R_q) for the exponential-claims model from the quadratic formula."""
    b = c * eta - nu - q
    disc = math.sqrt(b * b + 4.0 * c * q * eta)
    phi = (-b + disc) / (2 * c)
    r = (b + disc) / (2 * c)
    if q == 0:
        # roots 0 and -b/c; Phi_0 is the non-negative one on the right
        phi, r = (0.0, b / c) if b > 0 else (-b / c, 0.0)
    return phi, r


def cl_psi_prime(c, nu, eta, t):
    return c - nu * eta / (t + eta) ** 2


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
