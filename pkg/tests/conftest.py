import math

import numpy as np
import pytest

from polsqueeze.fock_oracle import TruncationPolicy
from polsqueeze.stokes_core import make_coherent_input

QUARTER = math.pi / 4


@pytest.fixture
def optimum_input():
    """theta = pi/4, phi_x = phi_y = 3 pi/4 (phase sum 3 pi/2)."""
    return make_coherent_input(1.0, QUARTER, 3 * QUARTER, 3 * QUARTER)


@pytest.fixture
def generic_input():
    return make_coherent_input(1.0, math.pi / 3, 0.3, 0.9)


@pytest.fixture(scope="session")
def policy():
    return TruncationPolicy()


def heisenberg_means(alpha: complex, beta: complex, T: float):
    """<S0>, <S1>, <S2>, <S3> from the Bogoliubov map applied to a coherent state.

    Uses only normal-ordered products of ax(T) = c ax - i s ay^+,
    ay(T) = c ay - i s ax^+ evaluated on |alpha, beta>; no trigonometric
    expansion of the angles.
    """
    c, s = math.cosh(T), math.sinh(T)
    ca, cb = alpha.conjugate(), beta.conjugate()
    # <ax^+ ax>(T) = c^2 |a|^2 + s^2 (|b|^2 + 1) + i c s (a b - a* b*)
    nx = c * c * abs(alpha) ** 2 + s * s * (abs(beta) ** 2 + 1) + (1j * c * s * (alpha * beta - ca * cb)).real
    ny = c * c * abs(beta) ** 2 + s * s * (abs(alpha) ** 2 + 1) + (1j * c * s * (alpha * beta - ca * cb)).real
    # <ax^+ ay>(T) = c^2 a* b + s^2 b a* + i c s (b^2 - a*^2)
    k = (c * c + s * s) * ca * beta + 1j * c * s * (beta * beta - ca * ca)
    return nx + ny, nx - ny, 2 * k.real, 2 * k.imag


def rel_close(x, y, rel=1e-6, abs_=1e-8):
    x, y = np.asarray(x, float), np.asarray(y, float)
    return bool(np.all(np.abs(x - y) <= np.maximum(rel * np.abs(x), abs_)))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
