"""Grids, quadrature weights, Laplacians and field containers.

Three geometries are supported:

* ``cartesian``   -- every axis periodic (Fourier), x_j = -L + j*h, h = 2L/m
* ``cylindrical`` -- (r, x_n): a radial axis for |x'| in R^d plus a periodic axis
* ``radial``      -- a single radial axis for |x| in R^d (fully radial states)

Radial axes are cell centred, r_i = (i + 1/2) h with h = L/m, so r = 0 is never
sampled.  The discrete radial Laplacian is written in flux form so that it is
symmetric with respect to the quadrature weights.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 2 ** 22
GEOMETRIES = ("cartesian", "cylindrical", "radial")


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Axis:
    name: str
    L: float
    m: int
    kind: str = "periodic"  # or "radial"

    @property
    def h(self) -> float:
        return (2.0 * self.L if self.kind == "periodic" else self.L) / self.m

    @cached_property
    def x(self) -> np.ndarray:
        if self.kind == "periodic":
            return -self.L + self.h * np.arange(self.m)
        return self.h * (np.arange(self.m) + 0.5)

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers matching numpy's FFT ordering (periodic axes only)."""
        if self.kind != "periodic":
            raise GridError("wavenumbers requested on a radial axis")
        return 2.0 * np.pi * np.fft.fftfreq(self.m, d=self.h)


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1} in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@dataclass(frozen=True, eq=False)
class GridSpec:
    geometry: str
    axes: tuple
    rdim: int = 0  # dimension carried by the radial axis, 0 if there is none
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise GridError(f"unknown geometry {self.geometry!r}")
        if self.size > self.budget:
            raise GridError(f"grid has {self.size} points, budget is {self.budget}")

    @property
    def shape(self) -> tuple:
        return tuple(a.m for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def radial_axis(self):
        for i, a in enumerate(self.axes):
            if a.kind == "radial":
                return i
        return None

    @property
    def dim(self) -> int:
        """Spatial dimension of the represented domain."""
        if self.geometry == "cartesian":
            return self.ndim
        if self.geometry == "cylindrical":
            return self.rdim + 1
        return self.rdim

    @property
    def free_axis(self) -> int:
        """Index of x_n, the last axis by convention."""
        return self.ndim - 1

    def mesh(self, i: int) -> np.ndarray:
        """Coordinate of axis i broadcast against the grid shape."""
        shp = [1] * self.ndim
        shp[i] = self.axes[i].m
        return self.axes[i].x.reshape(shp)

    @cached_property
    def axis_weights(self) -> list:
        out = []
        for a in self.axes:
            if a.kind == "periodic":
                out.append(np.full(a.m, a.h))
            else:
                out.append(sphere_area(self.rdim) * _shell_volume(a.h, a.m, self.rdim))
        return out

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.ones(self.shape)
        for i, wa in enumerate(self.axis_weights):
            shp = [1] * self.ndim
            shp[i] = wa.size
            w = w * wa.reshape(shp)
        return w

    @cached_property
    def r2(self) -> np.ndarray:
        """|x|^2 on the grid."""
        out = np.zeros(self.shape)
        for i in range(self.ndim):
            out = out + self.mesh(i) ** 2
        return out

    @cached_property
    def r2_transverse(self) -> np.ndarray:
        """|x'|^2, i.e. |x|^2 without the x_n contribution."""
        if self.geometry == "radial":
            raise GridError("a fully radial grid has no transverse/axial split")
        return self.r2 - self.mesh(self.free_axis) ** 2

    def boundary_ratio(self, f) -> float:
        """max|f| on the outer boundary layer divided by max|f|."""
        a = np.abs(f)
        top = a.max()
        if top == 0:
            return 0.0
        edge = 0.0
        for i, ax in enumerate(self.axes):
            idx = [-1] if ax.kind == "radial" else [0, -1]
            edge = max(edge, np.take(a, idx, axis=i).max())
        return float(edge / top)


def make_grid(geometry: str, axes, rdim: int | None = None,
              budget: int = DEFAULT_BUDGET) -> GridSpec:
    """Build a validated grid.

    ``axes`` is a sequence of (name, L, m) triples.  An axis named ``r`` is
    radial.  For cylindrical/radial geometry ``rdim`` is the dimension of the
    radial variable (transverse dimension d for cylindrical).
    """
    built = []
    for spec in axes:
        name, L, m = spec
        L = float(L)
        m = int(m)
        if not (L > 0) or m < 8:
            raise GridError(f"axis {name}: need L > 0 and m >= 8, got L={L}, m={m}")
        kind = "radial" if name == "r" else "periodic"
        if kind == "periodic" and m & (m - 1):
            raise GridError(f"axis {name}: periodic point count must be a power of two, got {m}")
        built.append(Axis(name, L, m, kind))
    kinds = [a.kind for a in built]
    if geometry == "cartesian":
        if "radial" in kinds:
            raise GridError("cartesian grids cannot carry a radial axis")
        rdim = 0
    elif geometry == "cylindrical":
        if kinds != ["radial", "periodic"]:
            raise GridError("cylindrical geometry needs exactly the axes (r, x_n)")
        rdim = 2 if rdim is None else int(rdim)
    elif geometry == "radial":
        if kinds != ["radial"]:
            raise GridError("radial geometry needs exactly one axis named r")
        rdim = 2 if rdim is None else int(rdim)
    else:
        raise GridError(f"unknown geometry {geometry!r}")
    if geometry != "cartesian" and rdim < 1:
        raise GridError("radial dimension must be >= 1")
    return GridSpec(geometry, tuple(built), rdim, budget)


def cartesian(*axes, budget=DEFAULT_BUDGET) -> GridSpec:
    return make_grid("cartesian", axes, budget=budget)


def cylindrical(r_axis, z_axis, d: int, budget=DEFAULT_BUDGET) -> GridSpec:
    return make_grid("cylindrical", [("r",) + tuple(r_axis), ("x_n",) + tuple(z_axis)], rdim=d, budget=budget)


def radial(L: float, m: int, d: int, budget=DEFAULT_BUDGET) -> GridSpec:
    return make_grid("radial", [("r", L, m)], rdim=d, budget=budget)


# --------------------------------------------------------------------------
# fields

@dataclass(eq=False)
class FieldPair:
    u: np.ndarray
    v: np.ndarray
    grid: GridSpec = field(repr=False)

    def __post_init__(self):
        self.u = np.asarray(self.u)
        self.v = np.asarray(self.v)
        if self.u.shape != self.grid.shape or self.v.shape != self.grid.shape:
            raise GridError(f"field shapes {self.u.shape}, {self.v.shape} do not match grid {self.grid.shape}")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))):
            raise GridError("non-finite samples in field pair")

    def copy(self) -> "FieldPair":
        return FieldPair(self.u.copy(), self.v.copy(), self.grid)

    def scaled(self, a, b) -> "FieldPair":
        return FieldPair(a * self.u, b * self.v, self.grid)


def integrate(f, grid: GridSpec):
    f = np.asarray(f)
    if f.shape != grid.shape:
        raise GridError(f"integrand shape {f.shape} does not match grid {grid.shape}")
    return np.sum(f * grid.weights)


def inner(f, g, grid: GridSpec):
    """<f, g> = int conj(f) g."""
    return integrate(np.conj(f) * g, grid)


def norm2(f, grid: GridSpec) -> float:
    return float(integrate(np.abs(f) ** 2, grid).real)


# --------------------------------------------------------------------------
# Laplacians

def _shell_volume(h, m, d):
    # exact (r_{i+1/2}^d - r_{i-1/2}^d) / d; the midpoint r^{d-1} h is off by O(1) in the first cell for d >= 3
    faces = h * np.arange(m + 1)
    return np.diff(faces ** d) / d


def radial_cell_factor(axis, d: int) -> np.ndarray:
    """Cell volume / h, the discrete stand-in for r^{d-1}."""
    return _shell_volume(axis.h, axis.m, d) / axis.h


def _radial_lap_1d(f, h, d, axis):
    """Flux-form radial Laplacian along ``axis`` (even ghost at 0, zero ghost at the edge)."""
    f = np.moveaxis(f, axis, 0)
    m = f.shape[0]
    faces = h * np.arange(1, m + 1)  # r_{i+1/2}, i = 0..m-1
    wf = faces ** (d - 1)
    wc = _shell_volume(h, m, d) / h
    shp = (m,) + (1,) * (f.ndim - 1)
    ghost = np.zeros((1,) + f.shape[1:], dtype=f.dtype)
    fp = np.concatenate([f[1:], ghost], axis=0)
    flux_out = wf.reshape(shp) * (fp - f)
    flux_in = np.concatenate([np.zeros_like(ghost), flux_out[:-1]], axis=0)
    out = (flux_out - flux_in) / (h * h * wc.reshape(shp))
    return np.moveaxis(out, 0, axis)


def second_derivative(f, grid: GridSpec, axis: int):
    a = grid.axes[axis]
    if a.kind == "periodic":
        k = a.k
        shp = [1] * grid.ndim
        shp[axis] = a.m
        out = np.fft.ifft(-(k ** 2).reshape(shp) * np.fft.fft(f, axis=axis), axis=axis)
        return out.real if np.isrealobj(f) else out
    return _radial_lap_1d(f, a.h, grid.rdim, axis)


def laplacian_apply(f, grid: GridSpec, axes=None):
    """Sum of second derivatives over ``axes`` (default: all, i.e. the full Laplacian).

    On a radial axis the term includes (d-1)/r d/dr.
    """
    f = np.asarray(f)
    if f.shape != grid.shape:
        raise GridError(f"field shape {f.shape} does not match grid {grid.shape}")
    axes = range(grid.ndim) if axes is None else axes
    out = np.zeros_like(f, dtype=np.result_type(f, float))
    for i in axes:
        out = out + second_derivative(f, grid, i)
    return out


def dirichlet(f, grid: GridSpec, axes=None) -> float:
    """||grad f||^2 restricted to ``axes``, computed as -Re<f, Lap f> (discretely consistent)."""
    return float(-inner(f, laplacian_apply(f, grid, axes), grid).real)


def forward_gradient_sq(f, grid: GridSpec, axis: int) -> float:
    """||d_axis f||^2 with periodic forward differences (used for rearrangement checks)."""
    a = grid.axes[axis]
    df = (np.roll(f, -1, axis=axis) - f) / a.h
    return float(integrate(np.abs(df) ** 2, grid).real)


def fft_roundtrip(f, axes=None):
    axes = tuple(range(np.ndim(f))) if axes is None else tuple(axes)
    return np.fft.ifftn(np.fft.fftn(f, axes=axes), axes=axes)


def parseval_norm2(f, grid: GridSpec) -> float:
    """||f||^2 from Fourier coefficients (all-periodic grids)."""
    if any(a.kind != "periodic" for a in grid.axes):
        raise GridError("Parseval check needs an all-periodic grid")
    c = np.fft.fftn(f)
    cell = np.prod([a.h for a in grid.axes])
    return float(np.sum(np.abs(c) ** 2).real * cell / grid.size)
