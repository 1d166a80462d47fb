import math

import numpy as np
import pytest

from nlsq.functionals import ModelParams
from nlsq.grid import cartesian, norm2
from nlsq.groundstate import ConstraintSpec, SolverConfig, solve_groundstate
from nlsq.oscillator import transverse_grid, transverse_spectrum
from nlsq.reduced import (Reduced1DProblem, ReductionError, compare_full_vs_reduced, printed_inf_coefficient,
                          reduced_coefficients, solve_reduced)

LINE = cartesian(("x", 64, 512))


def _solve(c1, c2, kappa, mu1, mu2, grid=LINE):
    return solve_reduced(Reduced1DProblem(c1, c2, kappa, mu1, mu2, grid))


def test_proportional_sech2_oracle():
    # c1 = c2 = c, kappa = 1, mu2 = mu1/2: psi = phi/sqrt2, phi = (3 lam sqrt2 / 2c) sech^2(sqrt(lam) x / 2),
    # mass 12 lam^{3/2} / c^2 fixes lam.
    c, mu1 = 0.6, 2.0
    lam = (mu1 * c * c / 12) ** (2 / 3)
    res = _solve(c, c, 1.0, mu1, mu1 / 2)
    assert res.converged
    x = LINE.axes[0].x
    phi = 3 * lam * math.sqrt(2) / (2 * c) / np.cosh(math.sqrt(lam) * x / 2) ** 2
    assert res.lambda1 == pytest.approx(lam, rel=1e-7)
    assert res.lambda2 == pytest.approx(lam, rel=1e-7)
    assert np.max(np.abs(res.pair.u.real - phi)) < 1e-6
    assert np.max(np.abs(res.pair.v.real - phi / math.sqrt(2))) < 1e-6
    assert res.extra["reduced_residual"] < 1e-6


@pytest.mark.parametrize("kappa", [0.5, 2.0])
def test_multiplier_relation(kappa):
    mu1 = 1.5
    res = _solve(0.5, 0.5, kappa, mu1, mu1 / (2 * kappa))
    assert res.converged
    assert res.lambda2 == pytest.approx(kappa * res.lambda1, rel=1e-7)


def test_unequal_coefficients_residual():
    res = _solve(0.4, 0.9, 1.3, 1.0, 0.7)
    assert res.converged and res.extra["reduced_residual"] < 1e-6
    assert res.lambda1 > 0 and res.lambda2 > 0
    assert norm2(res.pair.u, LINE) == pytest.approx(1.0, rel=1e-10)
    assert norm2(res.pair.v, LINE) == pytest.approx(0.7, rel=1e-10)


def test_coupling_doubling_scaling():
    # doubling (c1, c2) at fixed masses: phi_2(x) = 2^{1/3} phi(2^{2/3} x), lam' = 2^{4/3} lam
    a = _solve(0.3, 0.5, 1.0, 1.0, 0.8, cartesian(("x", 128, 1024)))
    b = _solve(0.6, 1.0, 1.0, 1.0, 0.8, cartesian(("x", 128, 1024)))
    assert b.lambda1 / a.lambda1 == pytest.approx(2 ** (4 / 3), rel=1e-6)
    assert b.lambda2 / a.lambda2 == pytest.approx(2 ** (4 / 3), rel=1e-6)
    assert b.pair.u.real.max() / a.pair.u.real.max() == pytest.approx(2 ** (1 / 3), rel=1e-5)
    assert b.I / a.I == pytest.approx(2 ** (4 / 3), rel=1e-6)
    assert a.I < 0


def test_profile_even_and_decreasing():
    res = _solve(0.4, 0.9, 1.3, 1.0, 0.7)
    phi = res.pair.u.real
    c = np.argmax(phi)
    assert c == LINE.axes[0].m // 2
    assert np.all(np.diff(phi[c:]) <= 1e-14) and np.all(np.diff(phi[:c + 1]) >= -1e-14)
    assert np.max(np.abs(phi - np.roll(phi[::-1], 1))) < 1e-8


def test_problem_validation():
    with pytest.raises(ReductionError):
        Reduced1DProblem(0.0, 1.0, 1.0, 1.0, 1.0, LINE)
    with pytest.raises(ReductionError):
        Reduced1DProblem(1.0, 1.0, 1.0, 1.0, 1.0, cartesian(("x", 4, 16), ("y", 4, 16)))


def test_coefficient_sources():
    g = cartesian(("x", 8, 32))
    bu, bv = transverse_spectrum(1.0, 1, g), transverse_spectrum(1.0, 1, g)
    c1, c2 = reduced_coefficients("overlap", 1.0, 2, bu, bv)
    assert c1 == c2 == pytest.approx(math.sqrt(2 / 3) * math.pi ** -0.25, rel=1e-10)
    assert reduced_coefficients("printed_inf", 3.0, 2) == (printed_inf_coefficient(3.0),) * 2
    assert len(reduced_coefficients("printed_sn", 1.0, 2)) == 2
    with pytest.raises(ReductionError):
        reduced_coefficients("overlap", 1.0, 2)
    with pytest.raises(ReductionError):
        reduced_coefficients("guess", 1.0, 2)


@pytest.fixture(scope="module")
def small_mass_pair():
    grid = cartesian(("x1", 8, 32), ("x2", 128, 512))
    params = ModelParams(2, 1.0, "V2")
    full = solve_groundstate(params, ConstraintSpec.product(0.1, 0.1), grid)
    tg = transverse_grid(grid)
    bu, bv = transverse_spectrum(1.0, 1, tg), transverse_spectrum(1.0, 1, tg)
    c1, c2 = reduced_coefficients("overlap", 1.0, 2, bu, bv)
    red = solve_reduced(Reduced1DProblem(c1, c2, 1.0, 0.1, 0.1, cartesian(("x2", 128, 512))))
    return full, bu, bv, red


def test_comparison_small_mass(small_mass_pair):
    full, bu, bv, red = small_mass_pair
    assert full.converged and red.converged
    rep = compare_full_vs_reduced(full, bu, bv, red)
    assert rep.mu_total == pytest.approx(0.2)
    assert 0 < rep.ratio_l2 < 0.05
    assert 0 < rep.ratio_h1_axial < 0.01 and 0 < rep.ratio_multiplier < 0.01
    assert abs(rep.shift) < 0.5
    assert set(rep.to_dict()) >= {"ratio_l2", "ratio_h1_axial", "ratio_multiplier", "mu_total"}


def test_comparison_translation_invariant(small_mass_pair):
    from nlsq.groundstate import fourier_shift
    full, bu, bv, red = small_mass_pair
    base = compare_full_vs_reduced(full, bu, bv, red)
    g = red.pair.grid
    shifted = type(red)(type(red.pair)(fourier_shift(red.pair.u, g, 0, 3.0), fourier_shift(red.pair.v, g, 0, 3.0), g),
                        red.I, red.lambda1, red.lambda2, red.pohozaev, red.grad_residual, red.iterations,
                        red.converged, red.constraint, red.params, red.extra)
    rep = compare_full_vs_reduced(full, bu, bv, shifted)
    assert rep.ratio_l2 == pytest.approx(base.ratio_l2, rel=1e-4)


def test_comparison_grid_mismatch(small_mass_pair):
    full, bu, bv, _ = small_mass_pair
    other = solve_reduced(Reduced1DProblem(0.5, 0.5, 1.0, 0.1, 0.1, cartesian(("x2", 64, 256))))
    with pytest.raises(ReductionError):
        compare_full_vs_reduced(full, bu, bv, other)
