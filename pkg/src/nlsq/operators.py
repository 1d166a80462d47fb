"""Separable linear operators  -c*Lap + a*sum_{axes} x_i^2  and their eigenbases.

Each axis carries its own 1D operator.  Periodic axes without a potential are
diagonal in the FFT basis; every other axis (harmonic periodic axis, radial axis)
gets a dense symmetric eigendecomposition.  The full operator is the Kronecker
sum, so any function g of it acts as  T^{-1} g(Lambda) T.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal, solve_banded

from .grid import GridSpec, radial_cell_factor


def fourier_d2_matrix(axis) -> np.ndarray:
    """Dense matrix of the spectral second derivative on a periodic axis (real symmetric)."""
    m = axis.m
    k2 = axis.k ** 2
    eye = np.eye(m)
    return np.fft.ifft(-k2[:, None] * np.fft.fft(eye, axis=0), axis=0).real


def radial_tridiagonal(axis, d: int, c: float, a: float):
    """Diagonal and off-diagonal of the weight-symmetrised radial operator -c*L_r + a*r^2."""
    h = axis.h
    m = axis.m
    r = axis.x
    faces = h * np.arange(1, m + 1)
    wf = faces ** (d - 1)
    wc = radial_cell_factor(axis, d)
    # -L_r f_i = [wf_{i-1}(f_i - f_{i-1}) - wf_i(f_{i+1} - f_i)] / (h^2 wc_i)
    left = np.concatenate([[0.0], wf[:-1]])
    diag = c * (left + wf) / (h * h * wc) + a * r ** 2
    # symmetrised off-diagonal: -c wf_i / h^2 / sqrt(wc_i wc_{i+1})
    off = -c * wf[:-1] / (h * h * np.sqrt(wc[:-1] * wc[1:]))
    return diag, off


@dataclass
class AxisBasis:
    kind: str            # "fft" or "dense"
    evals: np.ndarray
    vecs: np.ndarray | None = None   # orthonormal (symmetrised) eigenvectors, columns
    sqrtw: np.ndarray | None = None  # sqrt of the radial cell factor, None on periodic axes


def axis_basis(grid: GridSpec, i: int, c: float, a: float) -> AxisBasis:
    ax = grid.axes[i]
    if ax.kind == "periodic":
        if a == 0.0:
            return AxisBasis("fft", c * ax.k ** 2)
        A = -c * fourier_d2_matrix(ax) + a * np.diag(ax.x ** 2)
        ev, vec = eigh(A)
        return AxisBasis("dense", ev, vec)
    diag, off = radial_tridiagonal(ax, grid.rdim, c, a)
    ev, vec = eigh_tridiagonal(diag, off)
    return AxisBasis("dense", ev, vec, np.sqrt(radial_cell_factor(ax, grid.rdim)))


class SeparableOperator:
    """-c*Lap + scale * sum_{i in pot_axes} x_i^2 on a grid.

    The eigenbasis is built lazily; on a single radial axis, shifted solves use
    a banded factorisation and never touch it.
    """

    def __init__(self, grid: GridSpec, c: float = 1.0, scale: float = 0.0, pot_axes=()):
        self.grid = grid
        self.c = float(c)
        self.scale = float(scale)
        self.pot_axes = tuple(pot_axes)
        self._bases = None
        self._evals = None
        self._ground = None

    def _a(self, i):
        return self.scale if i in self.pot_axes else 0.0

    @property
    def bases(self):
        if self._bases is None:
            self._bases = [axis_basis(self.grid, i, self.c, self._a(i)) for i in range(self.grid.ndim)]
        return self._bases

    @property
    def evals(self):
        if self._evals is None:
            lam = np.zeros(self.grid.shape)
            for i, b in enumerate(self.bases):
                shp = [1] * self.grid.ndim
                shp[i] = b.evals.size
                lam = lam + b.evals.reshape(shp)
            self._evals = lam
        return self._evals

    @property
    def _radial_1d(self) -> bool:
        return self.grid.ndim == 1 and self.grid.axes[0].kind == "radial"

    @property
    def ground(self) -> float:
        if self._ground is None:
            if self._radial_1d and self._bases is None:
                diag, off = radial_tridiagonal(self.grid.axes[0], self.grid.rdim, self.c, self._a(0))
                self._ground = float(eigh_tridiagonal(diag, off, eigvals_only=True,
                                                      select="i", select_range=(0, 0))[0])
            else:
                self._ground = float(self.evals.min())
        return self._ground

    def _along(self, f, i, mat):
        f = np.moveaxis(f, i, 0)
        out = np.tensordot(mat, f, axes=(1, 0))
        return np.moveaxis(out, 0, i)

    def forward(self, f):
        out = np.asarray(f, dtype=complex) if np.iscomplexobj(f) else np.asarray(f, dtype=float)
        for i, b in enumerate(self.bases):
            if b.kind == "fft":
                out = np.fft.fft(out, axis=i)
            else:
                if b.sqrtw is not None:
                    shp = [1] * self.grid.ndim
                    shp[i] = b.sqrtw.size
                    out = out * b.sqrtw.reshape(shp)
                out = self._along(out, i, b.vecs.T)
        return out

    def inverse(self, c, real: bool = False):
        out = c
        for i in reversed(range(self.grid.ndim)):
            b = self.bases[i]
            if b.kind == "fft":
                out = np.fft.ifft(out, axis=i)
            else:
                out = self._along(out, i, b.vecs)
                if b.sqrtw is not None:
                    shp = [1] * self.grid.ndim
                    shp[i] = b.sqrtw.size
                    out = out / b.sqrtw.reshape(shp)
        return out.real if real else out

    def apply_function(self, f, g):
        """g(A) f where ``g`` is an array of values on the eigenvalue grid."""
        real = np.isrealobj(f) and np.isrealobj(g)
        return self.inverse(g * self.forward(f), real=real)

    def apply(self, f):
        return self.apply_function(f, self.evals)

    def solve_shifted(self, f, shift: float):
        """(A - shift)^{-1} f."""
        if self._radial_1d:
            diag, off = radial_tridiagonal(self.grid.axes[0], self.grid.rdim, self.c, self._a(0))
            sw = np.sqrt(radial_cell_factor(self.grid.axes[0], self.grid.rdim))
            ab = np.zeros((3, diag.size))
            ab[0, 1:] = off
            ab[1] = diag - shift
            ab[2, :-1] = off
            return solve_banded((1, 1), ab, f * sw) / sw
        return self.apply_function(f, 1.0 / (self.evals - shift))

    def propagate(self, f, dt: float):
        """exp(-i A dt) f."""
        return self.apply_function(np.asarray(f, dtype=complex), np.exp(-1j * self.evals * dt))
