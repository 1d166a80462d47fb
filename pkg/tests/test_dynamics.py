import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from nlsq.dynamics import (CSV_HEADER, DynamicsError, EvolveConfig, LinearPropagator, _rk4, blowup_class_check,
                           blowup_data, blowup_lambda_min, calibrate_mehler, evolve, global_threshold_check,
                           is_concave, linear_step, nonlinear_step, pointwise_invariant, step_many,
                           virial_second_derivative)
from nlsq.functionals import ModelParams, energy_E, mass_Q
from nlsq.grid import FieldPair, cartesian, radial


def test_eigenmode_rotates_by_phase():
    g = cartesian(("x1", 10, 64), ("x2", 10, 64))
    params = ModelParams(2, 2.0, "V1", interaction=False)
    gauss = np.exp(-g.r2 / 2) + 0j
    psi_v = np.exp(-g.r2 / (2 * math.sqrt(2))) + 0j  # ground mode of -2 Lap + |x|^2, energy 2 sqrt2
    t = 0.731
    out = linear_step(FieldPair(gauss, psi_v, g), params, t)
    assert np.max(np.abs(out.u - np.exp(-2j * t) * gauss)) < 1e-12
    assert np.max(np.abs(out.v - np.exp(-2j * math.sqrt(2) * t) * psi_v)) < 1e-12


def test_free_flow_is_fourier_multiplier():
    g = cartesian(("x", 2 * math.pi, 64))
    x = g.axes[0].x
    params = ModelParams(1, 0.5, "none", interaction=False)
    u = np.exp(3j * x)
    v = np.exp(-2j * x)
    out = linear_step(FieldPair(u, v, g), params, 0.4)
    assert np.max(np.abs(out.u - np.exp(-9j * 0.4) * u)) < 1e-12
    assert np.max(np.abs(out.v - np.exp(-0.5 * 4j * 0.4) * v)) < 1e-12


def test_mehler_kernel_frequency():
    g = cartesian(("x", 10, 256))
    best, errs = calibrate_mehler(g, 0.3)
    assert best == 2.0
    assert errs[2.0] < 1e-10 and errs[math.sqrt(2)] > 1e-2


def _ode(t, y):
    u, v = y[0] + 1j * y[1], y[2] + 1j * y[3]
    du, dv = 1j * v * np.conj(u), 0.5j * u * u
    return [du.real, du.imag, dv.real, dv.imag]


def test_rk4_against_dop853(rng):
    u0 = rng.normal(size=6) + 1j * rng.normal(size=6)
    v0 = rng.normal(size=6) + 1j * rng.normal(size=6)
    T, n = 0.5, 200
    u, v = _rk4(u0.copy(), v0.copy(), T, n)
    for k in range(6):
        y0 = [u0[k].real, u0[k].imag, v0[k].real, v0[k].imag]
        sol = solve_ivp(_ode, (0, T), y0, method="DOP853", rtol=1e-13, atol=1e-13)
        y = sol.y[:, -1]
        assert abs(u[k] - (y[0] + 1j * y[1])) < 1e-8
        assert abs(v[k] - (y[2] + 1j * y[3])) < 1e-8


def test_pointwise_invariant_preserved(rng):
    g = cartesian(("x", 4, 64))
    u = rng.normal(size=64) + 1j * rng.normal(size=64)
    v = rng.normal(size=64) + 1j * rng.normal(size=64)
    out = nonlinear_step(FieldPair(u, v, g), 1e-2, 4)
    assert np.max(np.abs(pointwise_invariant(out.u, out.v) - pointwise_invariant(u, v))) < 1e-10


def test_short_time_expansion_from_zero_v():
    g = cartesian(("x", 4, 16))
    u0 = np.linspace(0.5, 1.5, 16) * np.exp(0.3j)
    t = 1e-3
    out = nonlinear_step(FieldPair(u0, np.zeros(16, complex), g), t)
    assert np.max(np.abs(out.v - 0.5j * u0 ** 2 * t)) < 5 * t ** 3
    assert np.max(np.abs(out.u - (u0 - np.abs(u0) ** 2 * u0 * t ** 2 / 4))) < 5 * t ** 3


def test_linear_flow_conserves_energy_exactly():
    g = cartesian(("x1", 8, 32), ("x2", 32, 128))
    params = ModelParams(2, 1.4, "V2", interaction=False)
    X, Y = g.mesh(0), g.mesh(1)
    u = np.exp(-(X ** 2 + Y ** 2) / 2) * np.exp(0.3j * Y)
    v = 0.5 * np.exp(-(X ** 2 + (Y - 1) ** 2) / 2) + 0j
    p0 = FieldPair(u, v, g)
    p1 = step_many(p0, params, 1e-2, 100)
    assert abs(energy_E(p1, params) / energy_E(p0, params) - 1) < 1e-12
    assert abs(mass_Q(p1) / mass_Q(p0) - 1) < 1e-12


def test_time_reversal():
    g = cartesian(("x1", 8, 32), ("x2", 32, 128))
    params = ModelParams(2, 1.0, "V2")
    X, Y = g.mesh(0), g.mesh(1)
    p0 = FieldPair(0.8 * np.exp(-(X ** 2 + Y ** 2) / 2) * np.exp(0.2j * Y),
                   0.5 * np.exp(-(X ** 2 + (Y - 1) ** 2) / 2) + 0j, g)
    p1 = step_many(p0, params, 1e-2, 50)
    back = step_many(p1, params, -1e-2, 50)
    assert np.max(np.abs(back.u - p0.u)) < 1e-11 and np.max(np.abs(back.v - p0.v)) < 1e-11


def test_evolve_series_and_csv():
    g = cartesian(("x1", 8, 32), ("x2", 32, 128))
    params = ModelParams(2, 1.0, "V2")
    X, Y = g.mesh(0), g.mesh(1)
    p0 = FieldPair(0.8 * np.exp(-(X ** 2 + Y ** 2) / 2) + 0j, 0.5 * np.exp(-(X ** 2 + Y ** 2) / 2) + 0j, g)
    ts = evolve(p0, params, EvolveConfig(dt=1e-2, T=0.5, stride=5))
    assert ts.verdict == "completed" and ts.t[-1] == pytest.approx(0.5)
    assert len(ts.t) == 11
    assert ts.drift("Q") < 1e-10
    lines = ts.to_csv().splitlines()
    assert lines[0] == CSV_HEADER == "t,Q,E,grad_u,grad_v,virial,N1"
    assert len(lines) == 12 and len(lines[1].split(",")) == 7
    assert ts.summary()["verdict"] == "completed"


def test_evolve_aborts_at_box_edge():
    g = cartesian(("x", 4, 64))
    x = g.axes[0].x
    p0 = FieldPair(np.exp(-x ** 2 / 8) + 0j, 0 * x + 0j, g)
    with pytest.raises(DynamicsError) as info:
        evolve(p0, ModelParams(1, 1.0, "none"), EvolveConfig(dt=1e-2, T=0.1, stride=1))
    assert info.value.series is not None


def test_evolve_config_validation():
    with pytest.raises(ValueError):
        EvolveConfig(dt=1.0, T=0.5)
    with pytest.raises(ValueError):
        EvolveConfig(gmax_factor=1.0)
    assert EvolveConfig(dt=1e-3).dt_floor == pytest.approx(1e-3 / 65536)


def test_virial_second_derivative_on_parabola():
    from nlsq.dynamics import TimeSeries
    ts = TimeSeries()
    ts.t = list(np.sort(np.r_[0, np.random.default_rng(1).uniform(0, 1, 30), 1]))
    ts.virial = [5 - 3 * t ** 2 for t in ts.t]
    _, d2 = virial_second_derivative(ts)
    assert np.allclose(d2, -6)
    assert is_concave(ts)


def test_threshold_and_class_checks(soliton_n4):
    sol = soliton_n4
    g = sol.pair.grid
    half = FieldPair(math.sqrt(0.5) * sol.pair.u, math.sqrt(0.5) * sol.pair.v, g)
    chk = global_threshold_check(half, sol)
    assert chk["ratio"] == pytest.approx(0.5, rel=1e-12) and chk["below_threshold"]
    assert not global_threshold_check(sol.pair, sol)["below_threshold"]
    cyl = cartesian(("x1", 8, 32), ("x2", 16, 64))
    params = ModelParams(2, 1.0, "V2")
    X, Y = cyl.mesh(0), cyl.mesh(1)
    small = FieldPair(0.1 * np.exp(-(X ** 2 + Y ** 2) / 2) + 0j, 0.1 * np.exp(-(X ** 2 + Y ** 2) / 2) + 0j, cyl)
    ref = type("R", (), {"I": 10.0})()
    rep = blowup_class_check(small, params, ref)
    assert rep["N1"] > 0 and not rep["in_M"]


def test_blowup_lambda_min_zero_energy(soliton_n4):
    sol = soliton_n4
    params = ModelParams(4, 0.5, "V1")
    lm = blowup_lambda_min(sol, 1.1)
    E_at = energy_E(blowup_data(sol, 1.1, lm), params)
    E_above = energy_E(blowup_data(sol, 1.1, 1.3 * lm), params)
    scale = energy_E(blowup_data(sol, 1.1, 1.3 * lm), ModelParams(4, 0.5, "V1", interaction=False))
    assert abs(E_at) < 2e-3 * scale
    assert E_above < 0
    with pytest.raises(ValueError):
        blowup_lambda_min(sol, 0.9)
