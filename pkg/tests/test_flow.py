import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ode_flow, ode_flow_cartesian
from scgle import _kernels
from scgle.flow import FlowParams, apply_flow, phi_flow, psi0, psi_dt
from scgle.spectral import GridField

P21 = FlowParams(2.0, 1.0)
BIG = FlowParams(2.0**12, -3.0)


def mp_phi(z, dt, R, mu, dps=60):
    """Closed-form flow in high precision."""
    with mpmath.workdps(dps):
        z = mpmath.mpc(z)
        R, mu, dt = mpmath.mpf(R), mpmath.mpf(mu), mpmath.mpf(dt)
        s = abs(z) ** 2
        mod = mpmath.sqrt(R / (s - mpmath.exp(-2 * R * dt) * (s - R)))
        phase = mpmath.exp(-1j * mu / 2 * mpmath.log(1 + s * mpmath.expm1(2 * R * dt) / R))
        return mod * phase * z


def test_psi0_examples():
    assert psi0(0j, P21) == 0
    assert psi0(1 + 0j, P21) == 1 - 1j
    z = 0.5 + 0.5j
    with mpmath.workdps(50):
        ref = 4096 * mpmath.mpc(z) - (1 - 3j) * abs(mpmath.mpc(z)) ** 2 * mpmath.mpc(z)
    assert abs(psi0(z, BIG) - complex(ref)) < 1e-12


def test_phi_identity_at_zero_step():
    z = np.array([0.3 - 2j, 100 + 1j, 0j])
    np.testing.assert_array_equal(phi_flow(z, 0.0, BIG), z)


def test_phi_on_fixed_circle_without_twist():
    p = FlowParams(1.0, 0.0)
    for dt in (1e-9, 0.1, 0.5, 0.99):
        assert abs(phi_flow(1 + 0j, dt, p) - 1) < 1e-15


def test_phi_matches_ode_example():
    z = 1 + 0j
    ref = ode_flow_cartesian(z, 0.1, 2.0, 1.0)
    assert abs(phi_flow(z, 0.1, P21) - ref) < 1e-8
    assert abs(ode_flow(z, 0.1, 2.0, 1.0) - ref) < 1e-11


@pytest.mark.parametrize("p", [P21, BIG], ids=["R2", "R4096"])
def test_phi_matches_closed_form_high_precision(p):
    rng = np.random.default_rng(3)
    for _ in range(40):
        z = complex(*rng.uniform(-10, 10, 2))
        dt = float(rng.uniform(0, 0.5))
        ref = complex(mp_phi(z, dt, p.R, p.mu))
        assert abs(phi_flow(z, dt, p) - ref) <= 1e-12 * max(1.0, abs(ref))


def test_phi_extreme_inputs_stay_finite():
    z = np.array([1e-300, 1e-8, 1e8, 1e150, 64.0])
    for dt in (1e-12, 2.0**-12, 0.9):
        out = phi_flow(z, dt, BIG)
        assert np.all(np.isfinite(out))


def test_psi_dt_examples():
    assert psi_dt(1 + 0j, 0.0, P21) == 1 - 1j
    for dt in (0.0, 1e-10, 0.3):
        assert psi_dt(0j, dt, P21) == 0


def test_psi_dt_first_order():
    e1 = abs(psi_dt(1 + 0j, 1e-3, P21) - psi0(1 + 0j, P21))
    e2 = abs(psi_dt(1 + 0j, 5e-4, P21) - psi0(1 + 0j, P21))
    assert 1.6 <= e1 / e2 <= 2.4


@pytest.mark.parametrize("dt", [1e-15, 1e-12, 1e-9, 1e-7, 1e-5, 1e-3])
def test_psi_dt_small_steps_against_high_precision(dt):
    # covers the Taylor branch, the expm1 branch and the switch between them
    for z in (0.3 - 0.4j, 5 + 5j, 70 - 1j, 1e-200 + 0j):
        for p in (P21, BIG):
            with mpmath.workdps(80):
                ref = complex((mp_phi(z, dt, p.R, p.mu, dps=80) - mpmath.mpc(z)) / mpmath.mpf(dt))
            assert abs(psi_dt(z, dt, p) - ref) <= 1e-13 * abs(ref)


def test_psi_taylor_second_order_term():
    # here dt * (R + |1+i mu| s) ~ 2e-9, so the series is used and its dt term is
    # ~1e-9 relative: a wrong second coefficient would show far above 1e-13
    z, dt = 0.3 - 0.4j, 1e-9
    assert dt * (P21.R + abs(1 + 1j * P21.mu) * abs(z) ** 2) < _kernels.TAYLOR_SCALE
    with mpmath.workdps(80):
        ref = complex((mp_phi(z, dt, P21.R, P21.mu, dps=80) - mpmath.mpc(z)) / mpmath.mpf(dt))
    assert abs(psi_dt(z, dt, P21) - ref) <= 1e-13 * abs(ref)
    assert abs(psi0(z, P21) - ref) > 1e-10 * abs(ref)


def test_alpha():
    assert math.isclose(P21.alpha(0.1), math.expm1(0.4) / 2)
    with pytest.raises(ValueError):
        FlowParams(0.0, 1.0)


def test_apply_flow_against_ode():
    rng = np.random.default_rng(7)
    g = GridField(16, rng.uniform(-5, 5, 16) + 1j * rng.uniform(-5, 5, 16))
    out = apply_flow(g, 0.05, P21)
    ref = [ode_flow(complex(z), 0.05, P21.R, P21.mu) for z in g.values]
    assert np.max(np.abs(out.values - ref)) < 1e-8
    const = GridField(8, np.full(8, 1.5 - 0.5j))
    np.testing.assert_array_equal(apply_flow(const, 0.05, P21).values, np.full(8, phi_flow(1.5 - 0.5j, 0.05, P21)))
    np.testing.assert_array_equal(apply_flow(g, 0.0, P21).values, g.values)


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
def test_numba_and_numpy_kernels_agree():
    rng = np.random.default_rng(11)
    z = 10 ** rng.uniform(-6, 4, 4096) * np.exp(2j * np.pi * rng.random(4096))
    z[::97] = 0
    for dt in (0.0, 1e-10, 2.0**-12, 0.5):
        # the phase mu R dt is thousands of radians at dt=0.5, so ulp-level exponent
        # differences are amplified by that factor
        tol = 1e-14 * (1 + 3.0 * 4096.0 * dt)
        for f, g in ((_kernels._phi_numpy, _kernels._phi_numba), (_kernels._psi_numpy, _kernels._psi_numba)):
            a, b = f(z, dt, 4096.0, -3.0), g(z, dt, 4096.0, -3.0)
            assert np.all(np.abs(a - b) <= tol * np.maximum(1, np.abs(a)))
    np.testing.assert_allclose(_kernels._psi0_numba(z, 2.0, 1.0), _kernels._psi0_numpy(z, 2.0, 1.0), rtol=1e-15)


def test_backend_selected_by_env(monkeypatch):
    import importlib

    monkeypatch.setenv("SCGLE_NUMBA", "0")
    mod = importlib.reload(_kernels)
    try:
        assert mod.BACKEND == "numpy" and mod.phi_array is mod._phi_numpy
    finally:
        monkeypatch.delenv("SCGLE_NUMBA")
        importlib.reload(_kernels)


finite_z = st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=200, deadline=None)
@given(finite_z, st.floats(0, 0.999), st.floats(-np.pi, np.pi), st.sampled_from([P21, BIG]))
def test_rotation_equivariance(z, dt, theta, p):
    rot = cmath.exp(1j * theta)
    a = phi_flow(rot * z, dt, p)
    b = rot * phi_flow(z, dt, p)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(b))


@settings(max_examples=300, deadline=None)
@given(finite_z, st.floats(0, 0.999), st.sampled_from([P21, BIG, FlowParams(0.5, 7.0)]))
def test_cubic_bounds(z, dt, p):
    out = phi_flow(z, dt, p)
    if z == 0:
        assert out == 0
        return
    bound = math.exp(p.R * dt) * abs(z) if p.R * dt < 700 else math.inf
    assert abs(out) <= bound + 1e-12
    if abs(z) >= math.sqrt(p.R):
        assert abs(out) <= abs(z) + 1e-12
