import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlsq.functionals import (ModelError, ModelParams, energy_E, energy_I, gn_quotient, heisenberg_check,
                              interaction_K, mass_Q, pohozaev_B, potential_array, potential_axes, printed_gn_constant, report,
                              rearrange_line, steiner_rearrange_axial, virial_rhs)
from nlsq.grid import FieldPair, cartesian, forward_gradient_sq, integrate, norm2, radial


def _gauss_pair(g, a=1.0, b=0.5, w=1.0):
    r2 = g.r2
    return FieldPair(a * np.exp(-r2 / (2 * w * w)) + 0j, b * np.exp(-r2 / (2 * w * w)) + 0j, g)


def test_model_validation():
    with pytest.raises(ModelError):
        ModelParams(6)
    with pytest.raises(ModelError):
        ModelParams(2, kappa=0)
    with pytest.raises(ModelError):
        ModelParams(1, potential="V2")


def test_gaussian_closed_forms():
    # u = a e^{-x^2/2}, v = b e^{-x^2/2} on R^1
    g = cartesian(("x", 12, 128))
    a, b = 1.3, 0.7
    p = _gauss_pair(g, a, b)
    rp = math.sqrt(math.pi)
    assert mass_Q(p) == pytest.approx((a * a + 2 * b * b) * rp, rel=1e-13)
    assert interaction_K(p) == pytest.approx(a * a * b * rp / math.sqrt(1.5), rel=1e-13)
    params = ModelParams(1, 2.0, "V1")
    rep = report(p, params)
    assert rep.kinetic_u == pytest.approx(a * a * rp / 2, rel=1e-12)
    assert rep.potential_v == pytest.approx(b * b * rp / 2, rel=1e-12)


def test_interaction_homogeneity(rng):
    g = cartesian(("x", 8, 32), ("y", 8, 32))
    u = rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape)
    v = rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape)
    K = interaction_K(FieldPair(u, v, g))
    for s in (0.5, 2.0, -1.5):
        assert interaction_K(FieldPair(s * u, s * v, g)) == pytest.approx(s ** 3 * K, rel=1e-12)
    # gauge invariance u -> e^{i th} u, v -> e^{2 i th} v
    th = 0.7
    assert interaction_K(FieldPair(np.exp(1j * th) * u, np.exp(2j * th) * v, g)) == pytest.approx(K, rel=1e-12)


def test_energy_relations(rng):
    g = cartesian(("x1", 8, 32), ("x2", 16, 64))
    p = FieldPair(np.exp(-g.r2 / 3) * (1 + 0.1 * rng.normal(size=g.shape)), 0.5 * np.exp(-g.r2 / 2) + 0j, g)
    params = ModelParams(2, 1.7, "V2")
    rep = report(p, params)
    assert rep.I == pytest.approx(rep.I_from_parts(), rel=1e-14)
    assert energy_E(p, params) == pytest.approx(2 * energy_I(p, params), rel=1e-13)
    assert pohozaev_B(p, params) == pytest.approx(
        rep.kinetic_u + 1.7 * rep.kinetic_v - rep.potential_u - rep.potential_v - 0.5 * rep.K, rel=1e-13)
    d = rep.to_dict()
    assert d["energy.I"] == rep.I and d["virial.N1"] == rep.N1


def test_potentials():
    g = cartesian(("x1", 4, 16), ("x2", 4, 16))
    assert np.allclose(potential_array(g, ModelParams(2, 1, "V1")), g.r2)
    assert np.allclose(potential_array(g, ModelParams(2, 1, "V2")), g.mesh(0) ** 2 + 0 * g.mesh(1))
    with pytest.raises(ModelError):
        potential_axes(radial(4, 16, 2), ModelParams(2, 1, "V2"))


@pytest.mark.parametrize("n", [1, 2])
def test_heisenberg(n, rng):
    g = cartesian(*[(f"x{i}", 10, 64) for i in range(n)])
    gauss = np.exp(-g.r2 / 2)
    lhs, rhs = heisenberg_check(gauss, g, ModelParams(n))
    assert lhs == pytest.approx(rhs, rel=1e-10)  # equality for Gaussians
    for _ in range(5):
        f = gauss * (1 + 0.3 * rng.normal(size=g.shape))
        lhs, rhs = heisenberg_check(f, g, ModelParams(n))
        assert lhs <= rhs


def test_gn_dilation_invariance():
    g = cartesian(("x", 40, 1024))
    x = g.axes[0].x
    params = ModelParams(1, 2.0)
    J0 = None
    for lam in (0.8, 1.0, 1.25):
        u = lam ** 0.5 * np.exp(-(lam * x) ** 2 / 2) * (1 + 0.2 * lam * x)
        v = lam ** 0.5 * 0.7 * np.exp(-(lam * x) ** 2 / 3)
        J = gn_quotient(FieldPair(u + 0j, v + 0j, g), params)
        J0 = J if J0 is None else J0
        assert abs(J / J0 - 1) < 1e-10


def test_gn_needs_positive_K():
    g = cartesian(("x", 8, 32))
    p = _gauss_pair(g, 1.0, -1.0)
    with pytest.raises(ModelError):
        gn_quotient(p, ModelParams(1))


def test_printed_gn_constant_value():
    assert printed_gn_constant(2, 4.0) == pytest.approx(2 ** 0.5 * 4 ** 0.5 / 2 * 2)


def test_virial_rhs_needs_half_kappa():
    g = radial(6, 64, 4)
    p = _gauss_pair(g)
    with pytest.raises(ModelError):
        virial_rhs(p, ModelParams(4, 1.0, "V1"), 0.0)
    virial_rhs(p, ModelParams(4, 0.5, "V1"), 0.0)


# --------------------------------------------------------------------------
# Steiner rearrangement

def test_rearrange_line_shape():
    g = cartesian(("x", 4, 8))
    out = rearrange_line(np.array([0, 5, 1, 0, 3, 0, 2, 4.0]), g.axes[0])
    # centre sample at x=0 is index 4; values decrease outward
    assert out[4] == 5 and sorted(out) == sorted([0, 5, 1, 0, 3, 0, 2, 4.0])
    assert np.all(np.diff(out[4:]) <= 0) and np.all(np.diff(out[:5]) >= 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_steiner_properties(seed):
    rng = np.random.default_rng(seed)
    g = cartesian(("x1", 4, 8), ("x2", 8, 32))
    u = rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape)
    v = rng.normal(size=g.shape)
    s = steiner_rearrange_axial(FieldPair(u, v, g))
    for p in (1, 2, 3):
        for a, b in ((u, s.u), (v, s.v)):
            ref = integrate(np.abs(a) ** p, g)
            assert abs(integrate(np.abs(b) ** p, g) - ref) <= 1e-12 * ref
    for a, b in ((u, s.u), (v, s.v)):
        assert forward_gradient_sq(b, g, 1) <= forward_gradient_sq(np.abs(a), g, 1) * (1 + 1e-12)
