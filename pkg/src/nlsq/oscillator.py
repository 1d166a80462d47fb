"""Transverse oscillator spectra  -kappa*Lap_{x'} + |x'|^2  and lowest-mode projections."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, make_grid, integrate
from .operators import axis_basis


class SpectrumError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class OscillatorBasis:
    kappa: float
    d: int
    grid: GridSpec          # transverse grid
    evals: np.ndarray       # (J,)
    vecs: np.ndarray        # (J, *grid.shape), L2-normalised

    @property
    def count(self) -> int:
        return len(self.evals)

    @property
    def ground(self) -> np.ndarray:
        return self.vecs[0]

    @property
    def e0(self) -> float:
        return float(self.evals[0])


def transverse_grid(grid: GridSpec) -> GridSpec:
    """The x' part of a cartesian or cylindrical grid (everything except the last axis)."""
    if grid.geometry == "cartesian":
        if grid.ndim < 2:
            raise SpectrumError("a one-axis grid has no transverse directions")
        return make_grid("cartesian", [(a.name, a.L, a.m) for a in grid.axes[:-1]], budget=grid.budget)
    if grid.geometry == "cylindrical":
        a = grid.axes[0]
        return make_grid("radial", [("r", a.L, a.m)], rdim=grid.rdim, budget=grid.budget)
    raise SpectrumError("fully radial grids have no transverse directions")


def _fix_sign(v: np.ndarray) -> np.ndarray:
    flat = v.ravel()
    big = np.flatnonzero(np.abs(flat) > 1e-6 * np.abs(flat).max())
    return -v if flat[big[0]] < 0 else v


def _lowest_combos(lists, J):
    """Lowest J sums picking one entry from each list; returns (sum, index tuple) pairs."""
    combos = [(0.0, ())]
    for vals in lists:
        nxt = [(s + float(e), idx + (j,)) for s, idx in combos for j, e in enumerate(vals)]
        nxt.sort(key=lambda t: (t[0], t[1]))
        combos = nxt[:J]
    return combos


def transverse_spectrum(kappa: float, d: int, grid: GridSpec, J: int = 1) -> OscillatorBasis:
    """Lowest J eigenpairs of -kappa*Lap + |x'|^2 on a transverse grid.

    ``grid`` is either a cartesian grid with d axes (full spectrum) or a radial
    grid with rdim = d (radially symmetric sector only).
    """
    if J < 1:
        raise SpectrumError("need J >= 1")
    if kappa <= 0:
        raise SpectrumError("kappa must be positive")
    if grid.dim != d:
        raise SpectrumError(f"grid dimension {grid.dim} does not match d={d}")
    if grid.geometry == "radial":
        b = axis_basis(grid, 0, kappa, 1.0)
        if J > b.evals.size:
            raise SpectrumError("J exceeds the number of grid modes")
        vecs = (b.vecs[:, :J] / b.sqrtw[:, None]).T
        w = grid.weights
        vecs = np.array([v / math.sqrt(np.sum(w * v * v)) for v in vecs])
        evals = b.evals[:J].copy()
    elif grid.geometry == "cartesian":
        per_axis = []
        for i in range(grid.ndim):
            b = axis_basis(grid, i, kappa, 1.0)
            k = min(J, b.evals.size)
            per_axis.append((b.evals[:k], b.vecs[:, :k] / math.sqrt(grid.axes[i].h)))
        combos = _lowest_combos([p[0] for p in per_axis], J)
        if len(combos) < J:
            raise SpectrumError("J exceeds the number of grid modes")
        evals = np.array([c[0] for c in combos])
        vecs = []
        for _, idx in combos:
            v = per_axis[0][1][:, idx[0]]
            for i in range(1, grid.ndim):
                v = np.multiply.outer(v, per_axis[i][1][:, idx[i]])
            vecs.append(v)
        vecs = np.array(vecs)
    else:
        raise SpectrumError("transverse grid must be cartesian or radial")
    vecs = np.array([_fix_sign(v) for v in vecs])
    if grid.boundary_ratio(vecs[0]) > 1e-10:
        raise SpectrumError(f"transverse grid under-resolves the ground mode "
                            f"(boundary ratio {grid.boundary_ratio(vecs[0]):.2e})")
    if np.any(np.diff(evals) < -1e-12):
        raise SpectrumError("eigen-solver returned unsorted eigenvalues")
    return OscillatorBasis(float(kappa), int(d), grid, evals, vecs)


def _check_transverse(field, basis: OscillatorBasis):
    tshape = basis.grid.shape
    if field.shape[:-1] != tshape:
        raise SpectrumError(f"field transverse shape {field.shape[:-1]} does not match basis grid {tshape}")


def project_lowest(field, basis: OscillatorBasis):
    """Split field(x', x_n) = phi(x_n) e0(x') + remainder."""
    field = np.asarray(field)
    _check_transverse(field, basis)
    w = basis.grid.weights
    e0 = basis.ground
    nt = e0.ndim
    phi = np.tensordot(w * e0, field, axes=(tuple(range(nt)), tuple(range(nt))))
    rem = field - np.multiply.outer(e0, phi)
    return phi, rem


def overlap_constants(basis_u: OscillatorBasis, basis_v: OscillatorBasis):
    """s1 = int Psi0^2 Phi0,  s2 = int Phi0^3 on the shared transverse grid."""
    if basis_u.grid.shape != basis_v.grid.shape:
        raise SpectrumError("bases live on different transverse grids")
    p, f = basis_u.ground, basis_v.ground
    s1 = float(integrate(p * p * f, basis_u.grid))
    s2 = float(integrate(f ** 3, basis_v.grid))
    return s1, s2


def printed_overlap_constants(kappa: float, n: int):
    """Printed closed forms of the two overlap integrals; kept for side-by-side reporting only."""
    pre = math.pi ** (-(2 * n + 1) / 2)
    return (pre * (2 * kappa / (2 * kappa + 1)) ** ((n - 1) / 2),
            pre * (2 * kappa / 3) ** ((n - 1) / 2))
