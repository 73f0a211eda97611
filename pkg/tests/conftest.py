import math
import os

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from scgle.config import ModelParams, RunConfig
from scgle.convergence import LadderSpec, run_ladder

ACCEPTANCE_LINES: list[str] = []


def ode_flow(z: complex, dt: float, R: float, mu: float) -> complex:
    """Reference flow of z' = R z - (1 + i mu)|z|^2 z by adaptive Runge-Kutta.

    Integrated in polar form: u = ln|z|^2 obeys u' = 2R - 2e^u and the phase
    obeys theta' = -mu e^u.  The phase is carried as theta = -mu (R t + I) with
    I' = e^u - R, which stays O(1) even when mu R t is thousands of radians,
    so the absolute accuracy of the oracle does not degrade with R dt.
    """
    if z == 0 or dt == 0:
        return complex(z)

    def rhs(t, y):
        s = math.exp(y[0])
        return [2.0 * R - 2.0 * s, s - R]

    sol = solve_ivp(rhs, (0.0, dt), [math.log(abs(z) ** 2), 0.0], method="DOP853", rtol=1e-13, atol=1e-14)
    u, I = sol.y[:, -1]
    theta = -mu * (R * dt + I)
    return complex(z / abs(z) * math.exp(u / 2) * complex(math.cos(theta), math.sin(theta)))


def ode_flow_cartesian(z: complex, dt: float, R: float, mu: float) -> complex:
    """Same ODE integrated directly on (Re z, Im z); only sensible for moderate R dt."""

    def rhs(t, y):
        w = complex(y[0], y[1])
        d = R * w - (1 + 1j * mu) * abs(w) ** 2 * w
        return [d.real, d.imag]

    sol = solve_ivp(rhs, (0.0, dt), [z.real, z.imag], method="DOP853", rtol=1e-13, atol=1e-15)
    return complex(sol.y[0, -1], sol.y[1, -1])


@pytest.fixture(scope="session")
def threads():
    return os.cpu_count() or 1


@pytest.fixture(scope="session")
def stable_template():
    return RunConfig(seed=20240101)


@pytest.fixture(scope="session")
def desk_ladder():
    return LadderSpec(base_N=64, levels=4, J=20, parabolic=True, c=1.0)


@pytest.fixture(scope="session")
def ladder_reports(desk_ladder, stable_template, threads):
    """Desk-scale ladders shared by the convergence and acceptance tests."""
    cache = {}

    def get(method: str, setting: str = "stable"):
        key = (method, setting)
        if key not in cache:
            cfg = stable_template
            if setting == "defect":
                cfg = RunConfig(model=ModelParams(mu=-3.0, nu=3.0), seed=stable_template.seed)
            cache[key] = run_ladder(desk_ladder, cfg, method, threads=threads)
        return cache[key]

    return get


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
