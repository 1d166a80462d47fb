"""The one-dimensional limit system and its comparison with full partially-confined minimisers.

Reduced system (x = x_n):

    -phi''       - c1 phi psi   = -lam1 phi
    -kappa psi'' - (c2/2) phi^2 = -lam2 psi,    ||phi||^2 = mu1, ||psi||^2 = mu2.

For c1 != c2 this is not a gradient system as written, but psi = sqrt(c2/c1) psit
turns it into the Euler-Lagrange system of
    1/2 ||phi'||^2 + kappa/2 ||psit'||^2 - (sqrt(c1 c2)/2) int phi^2 psit,
which is what gets minimised.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .grid import FieldPair, GridSpec, norm2, dirichlet, integrate, laplacian_apply
from .functionals import ModelParams, potential_array
from .groundstate import (ConstraintSpec, SolverConfig, GroundStateResult, solve_groundstate,
                          fourier_shift)
from .oscillator import OscillatorBasis, project_lowest, overlap_constants, printed_overlap_constants


class ReductionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Reduced1DProblem:
    c1: float
    c2: float
    kappa: float
    mu1: float
    mu2: float
    grid: GridSpec

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0):
            raise ReductionError("cubic coefficients must be positive")
        if not (self.mu1 > 0 and self.mu2 > 0 and self.kappa > 0):
            raise ReductionError("masses and kappa must be positive")
        if self.grid.geometry != "cartesian" or self.grid.ndim != 1:
            raise ReductionError("the reduced problem lives on a periodic 1D grid")


COEFFICIENT_SOURCES = ("overlap", "printed_inf", "printed_sn")


def printed_inf_coefficient(kappa: float) -> float:
    """Coupling kappa/(3 sqrt(pi)) in the printed limit energy."""
    return kappa / (3.0 * math.sqrt(math.pi))


def reduced_coefficients(source: str, kappa: float, n: int, basis_u=None, basis_v=None):
    """(c1, c2) for the reduced system.

    "overlap" projects both equations onto the ground modes, which gives
    int Psi0^2 Phi0 in both slots.  The two printed variants are kept for reporting.
    """
    if source == "overlap":
        if basis_u is None or basis_v is None:
            raise ReductionError("overlap coefficients need both transverse bases")
        s1, _ = overlap_constants(basis_u, basis_v)
        return s1, s1
    if source == "printed_inf":
        c = printed_inf_coefficient(kappa)
        return c, c
    if source == "printed_sn":
        return printed_overlap_constants(kappa, n)
    raise ReductionError(f"unknown coefficient source {source!r}")


def reduced_residual(pair: FieldPair, prob: Reduced1DProblem, lam1: float, lam2: float) -> float:
    g = pair.grid
    phi, psi = pair.u, pair.v
    r1 = -laplacian_apply(phi, g) - prob.c1 * phi * psi + lam1 * phi
    r2 = -prob.kappa * laplacian_apply(psi, g) - 0.5 * prob.c2 * phi ** 2 + lam2 * psi
    return math.sqrt((norm2(r1, g) + norm2(r2, g)) / (norm2(phi, g) + norm2(psi, g)))


def solve_reduced(prob: Reduced1DProblem, config: SolverConfig | None = None) -> GroundStateResult:
    config = config or SolverConfig(grad_tol=1e-9)
    c1, c2 = prob.c1, prob.c2
    c = math.sqrt(c1 * c2)
    alpha = math.sqrt(c2 / c1)
    # hat variables: phi_h = c*phi, psi_h = c*psi/alpha solve the unit-coefficient system
    spec = ConstraintSpec.product(c * c * prob.mu1, c1 * c1 * prob.mu2)
    params = ModelParams(1, prob.kappa, "none")
    res = solve_groundstate(params, spec, prob.grid, config)
    phi = res.pair.u / c
    psi = alpha * res.pair.v / c
    pair = FieldPair(phi, psi, prob.grid)
    lam1, lam2 = -res.lambda1, -res.lambda2
    g = prob.grid
    I = (0.5 * dirichlet(phi, g) + 0.5 * prob.kappa * dirichlet(psi, g)
         - 0.5 * c * float(integrate(phi ** 2 * psi / alpha, g).real))
    extra = dict(res.extra)
    extra.update({
        "reduced_residual": reduced_residual(pair, prob, lam1, lam2),
        "c1": c1, "c2": c2,
    })
    return GroundStateResult(pair, I, lam1, lam2, float("nan"), res.grad_residual, res.iterations,
                             res.converged, "reduced-product", params, extra)


@dataclass
class ComparisonReport:
    ratio_l2: float
    ratio_h1_axial: float
    ratio_multiplier: float
    ratio_distance: float
    mu_total: float
    remainder_l2: float
    remainder_h1_axial: float
    multiplier_gap: float
    distance: float
    shift: float

    def to_dict(self) -> dict:
        return {"ratio_l2": self.ratio_l2, "ratio_h1_axial": self.ratio_h1_axial,
                "ratio_multiplier": self.ratio_multiplier, "mu_total": self.mu_total,
                "ratio_distance": self.ratio_distance}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _align(profile, target, grid1d: GridSpec) -> float:
    """Axial shift s maximising <profile, target(. - s)>."""
    h = grid1d.axes[0].h
    corr = np.fft.ifft(np.fft.fft(profile) * np.conj(np.fft.fft(target))).real
    j = int(np.argmax(corr))
    m = grid1d.axes[0].m
    s0 = (j if j <= m // 2 else j - m) * h

    def neg(s):
        return -float(np.sum(profile * fourier_shift(target, grid1d, 0, s)))

    out = minimize_scalar(neg, bounds=(s0 - h, s0 + h), method="bounded", options={"xatol": 1e-12 * max(1, h)})
    return float(out.x)


def compare_full_vs_reduced(full: GroundStateResult, basis_u: OscillatorBasis, basis_v: OscillatorBasis,
                            reduced: GroundStateResult) -> ComparisonReport:
    pair = full.pair
    g = pair.grid
    if g.geometry == "radial":
        raise ReductionError("full result must carry an x_n axis")
    ax = g.axes[g.free_axis]
    g1 = reduced.pair.grid
    if (g1.axes[0].L, g1.axes[0].m) != (ax.L, ax.m):
        raise ReductionError("reduced grid must coincide with the full x_n axis")
    if basis_u.grid.shape != g.shape[:-1] or basis_v.grid.shape != g.shape[:-1]:
        raise ReductionError("basis and full grid disagree on the transverse shape")
    phi_t, rem_u = project_lowest(pair.u.real, basis_u)
    psi_t, rem_v = project_lowest(pair.v.real, basis_v)
    l2 = math.sqrt(norm2(rem_u, g)) + math.sqrt(norm2(rem_v, g))
    axn = [g.free_axis]
    h1 = math.sqrt(max(dirichlet(rem_u, g, axn), 0.0)) + math.sqrt(max(dirichlet(rem_v, g, axn), 0.0))
    l0, m0 = basis_u.e0, basis_v.e0
    gap = abs(full.lambda1 - l0 + reduced.lambda1) + abs(full.lambda2 - m0 + reduced.lambda2)
    s = _align(phi_t, reduced.pair.u, g1)
    zeta = fourier_shift(reduced.pair.u, g1, 0, s)
    vsig = fourier_shift(reduced.pair.v, g1, 0, s)
    du = pair.u.real - np.multiply.outer(basis_u.ground, zeta)
    dv = pair.v.real - np.multiply.outer(basis_v.ground, vsig)
    V = potential_array(g, ModelParams(g.dim, 1.0, "V2"))
    dist2 = (dirichlet(du, g) + dirichlet(dv, g) + norm2(du, g) + norm2(dv, g)
             + float(integrate(V * (du ** 2 + dv ** 2), g).real))
    dist = math.sqrt(max(dist2, 0.0))
    mu_total = norm2(pair.u, g) + norm2(pair.v, g)
    return ComparisonReport(l2 / mu_total, h1 / mu_total, gap / mu_total, dist / mu_total, mu_total,
                            l2, h1, gap, dist, s)
