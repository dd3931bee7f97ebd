import numpy as np
import pytest

from hjjumps import problems


@pytest.fixture(scope="session")
def problem_a():
    return problems.load_spec("problem-a")


@pytest.fixture(scope="session")
def translations():
    return problems.load_spec("problem-theorem2-translations")


@pytest.fixture(scope="session")
def rotation_scaling():
    return problems.load_spec("problem-theorem2-rotation-scaling")


@pytest.fixture(scope="session")
def lemma1_general():
    return problems.load_spec("problem-lemma1-general")


# ---------------------------------------------------------------------------
# closed forms for problem-a, used as independent oracles
#
# Between jumps du/dt = -u, so u carries a factor e^{-dt}; every jump at
# t_j = 0.5 j multiplies u by (1 - 0.75) = 0.25.  The single spatial field
# is x, whose flow is plain exponential scaling by the accumulated flow
# time tau(t) = integral of u over [0, t].

A_PERIOD = 0.5
A_JUMP_FACTOR = 0.25


def a_u0(lam):
    return 0.5 * np.tanh(lam)


def a_u0_prime(lam):
    return 0.5 / np.cosh(lam) ** 2


def a_u_hat(t, lam):
    """Scalar characteristic value, right-continuous at jumps."""
    j = int(np.floor(t / A_PERIOD + 1e-12))
    start = a_u0(lam) * (A_JUMP_FACTOR * np.exp(-A_PERIOD)) ** j
    return start * np.exp(-(t - j * A_PERIOD))


def a_du_dlam(t, lam):
    j = int(np.floor(t / A_PERIOD + 1e-12))
    start = a_u0_prime(lam) * (A_JUMP_FACTOR * np.exp(-A_PERIOD)) ** j
    return start * np.exp(-(t - j * A_PERIOD))


def a_tau(t, lam):
    """Accumulated flow time: integral of the characteristic value."""
    j = int(np.floor(t / A_PERIOD + 1e-12))
    per_interval = A_JUMP_FACTOR * np.exp(-A_PERIOD)
    total = 0.0
    for i in range(j):
        u_i = a_u0(lam) * per_interval**i
        total += u_i * (1.0 - np.exp(-A_PERIOD))
    u_j = a_u0(lam) * per_interval**j
    total += u_j * (1.0 - np.exp(-(t - j * A_PERIOD)))
    return total


def a_dtau_dlam(t, lam):
    return a_tau(t, lam) / a_u0(lam) * a_u0_prime(lam) if a_u0(lam) != 0 else 0.0


def a_x_hat(t, lam):
    return lam * np.exp(a_tau(t, lam))


def a_u(t, x):
    """Solution value by numerically inverting the closed-form forward map."""
    lam = x
    for _ in range(200):
        nxt = x * np.exp(-a_tau(t, lam))
        if abs(nxt - lam) <= 1e-15:
            lam = nxt
            break
        lam = nxt
    return a_u_hat(t, lam)
