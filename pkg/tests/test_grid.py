import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlsq import snapshot
from nlsq.grid import (FieldPair, GridError, cartesian, cylindrical, dirichlet, fft_roundtrip, integrate,
                       laplacian_apply, make_grid, norm2, parseval_norm2, radial, sphere_area)


def test_gaussian_quadrature_1d():
    g = cartesian(("x", 10, 64))
    x = g.axes[0].x
    val = integrate(np.exp(-1.5 * x ** 2), g)
    assert abs(val - math.sqrt(2 * math.pi / 3)) < 1e-14


def test_gaussian_quadrature_radial_matches_cartesian():
    # int_{R^3} e^{-r^2} = pi^{3/2}
    g = radial(8, 800, 3)
    val = integrate(np.exp(-g.axes[0].x ** 2), g)
    assert abs(val - math.pi ** 1.5) < 1e-4


def test_sphere_area():
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


def test_axis_points():
    g = cartesian(("x", 4, 8))
    x = g.axes[0].x
    assert x[0] == -4 and x[1] - x[0] == 1.0 and x.size == 8
    r = radial(2, 8, 2).axes[0].x
    assert r[0] == pytest.approx(0.125) and r[-1] == pytest.approx(2 - 0.125)


@pytest.mark.parametrize("bad", [[("x", 4, 12)], [("x", -1, 16)], [("x", 4, 4)]])
def test_invalid_axes(bad):
    with pytest.raises(GridError):
        make_grid("cartesian", bad)


def test_geometry_validation():
    with pytest.raises(GridError):
        make_grid("cylindrical", [("x1", 4, 16), ("x2", 4, 16)])
    with pytest.raises(GridError):
        make_grid("torus", [("x", 4, 16)])


def test_fieldpair_validation():
    g = cartesian(("x", 4, 16))
    with pytest.raises(GridError):
        FieldPair(np.zeros(8), np.zeros(16), g)
    with pytest.raises(GridError):
        FieldPair(np.full(16, np.nan), np.zeros(16), g)


def test_spectral_laplacian_exact_on_gaussian():
    g = cartesian(("x", 12, 128), ("y", 12, 128))
    X, Y = g.mesh(0), g.mesh(1)
    f = np.exp(-(X ** 2 + Y ** 2) / 2)
    exact = (X ** 2 + Y ** 2 - 2) * f
    assert np.max(np.abs(laplacian_apply(f, g) - exact)) < 1e-12


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_radial_laplacian_second_order(d):
    errs = []
    for m in (200, 400):
        g = radial(10, m, d)
        r = g.axes[0].x
        f = np.exp(-r ** 2 / 2)
        exact = (r ** 2 - d) * f
        errs.append(np.max(np.abs(laplacian_apply(f, g) - exact)[r < 6]))
    rate = math.log2(errs[0] / errs[1])
    assert 1.8 < rate < 2.3


def test_cylindrical_laplacian():
    g = cylindrical((8, 400), (8, 64), 2)
    R, Z = g.mesh(0), g.mesh(1)
    f = np.exp(-(R ** 2 + Z ** 2) / 2)
    exact = (R ** 2 + Z ** 2 - 3) * f
    assert np.max(np.abs(laplacian_apply(f, g) - exact)) < 5e-3


def test_dirichlet_is_positive_and_matches_closed_form():
    g = cartesian(("x", 12, 128))
    x = g.axes[0].x
    f = np.exp(-x ** 2 / 2)
    # int x^2 e^{-x^2} = sqrt(pi)/2
    assert dirichlet(f, g) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_fft_roundtrip_and_parseval(seed):
    rng = np.random.default_rng(seed)
    g = cartesian(("x", 3, 16), ("y", 5, 32))
    f = rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape)
    assert np.max(np.abs(fft_roundtrip(f) - f)) < 1e-13
    assert parseval_norm2(f, g) == pytest.approx(norm2(f, g), rel=1e-12)


def test_parseval_rejects_radial():
    with pytest.raises(GridError):
        parseval_norm2(np.ones(16), radial(2, 16, 2))


def test_boundary_ratio():
    g = cartesian(("x", 10, 64))
    x = g.axes[0].x
    assert g.boundary_ratio(np.exp(-x ** 2)) < 1e-40
    assert g.boundary_ratio(np.ones(64)) == 1.0


# --------------------------------------------------------------------------
# snapshots

def _random_pair(g, seed=0):
    rng = np.random.default_rng(seed)
    return FieldPair(rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape),
                     rng.normal(size=g.shape) + 0j, g)


@pytest.mark.parametrize("g", [cartesian(("x1", 4, 8), ("x2", 6, 16)),
                               cylindrical((5, 12), (7, 16), 3),
                               radial(9, 20, 4)])
def test_snapshot_roundtrip_bit_exact(g, tmp_path):
    pair = _random_pair(g)
    p = tmp_path / "a.nlsq"
    snapshot.save(p, pair)
    back = snapshot.load(p)
    assert back.grid.geometry == g.geometry and back.grid.shape == g.shape and back.grid.rdim == g.rdim
    assert np.array_equal(back.u, pair.u) and np.array_equal(back.v, pair.v)
    assert snapshot.encode(back) == p.read_bytes()


def test_snapshot_header_layout():
    g = cylindrical((5, 12), (7, 16), 3)
    data = snapshot.encode(_random_pair(g))
    assert data[:4] == b"NLSQ"
    assert struct.unpack_from("<I", data, 4)[0] == 1
    assert data[8] == 1 | (3 << 4) and data[9] == 2
    assert struct.unpack_from("<dI", data, 10) == (5.0, 12)
    assert struct.unpack_from("<dI", data, 22) == (7.0, 16)
    assert len(data) == 34 + 2 * 16 * 12 * 16
    # first u sample is (real, imag) of u[0, 0]
    pair = snapshot.decode(data)
    assert struct.unpack_from("<dd", data, 34) == (pair.u[0, 0].real, pair.u[0, 0].imag)


def test_snapshot_rejects_corruption():
    data = snapshot.encode(_random_pair(cartesian(("x", 4, 8))))
    with pytest.raises(snapshot.SnapshotError):
        snapshot.decode(b"XXXX" + data[4:])
    with pytest.raises(snapshot.SnapshotError):
        snapshot.decode(data[:-1])
    with pytest.raises(snapshot.SnapshotError):
        snapshot.decode(data[:4] + struct.pack("<I", 9) + data[8:])
