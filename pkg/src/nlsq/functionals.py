"""Energies, masses, Pohozaev/virial quantities, the GN quotient and axial rearrangement."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .grid import FieldPair, GridSpec, integrate, norm2, dirichlet

POTENTIALS = ("none", "V1", "V2")


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    n: int
    kappa: float = 1.0
    potential: str = "none"
    potential_scale: float = 1.0
    interaction: bool = True  # switch used for linear sanity runs

    def __post_init__(self):
        if not (1 <= int(self.n) <= 5):
            raise ModelError(f"n must lie in [1, 5], got {self.n}")
        if not self.kappa > 0:
            raise ModelError("kappa must be positive")
        if self.potential not in POTENTIALS:
            raise ModelError(f"unknown potential {self.potential!r}")
        if self.potential == "V2" and self.n < 2:
            raise ModelError("V2 needs n >= 2")
        if not self.potential_scale > 0:
            raise ModelError("potential_scale must be positive")

    @property
    def eps0(self) -> float:
        return min(1.0, self.kappa)

    @property
    def delta0(self) -> float:
        return max(1.0, self.kappa)


def check_dim(grid: GridSpec, params: ModelParams):
    if grid.dim != params.n:
        raise ModelError(f"grid represents dimension {grid.dim} but n={params.n}")


def potential_axes(grid: GridSpec, params: ModelParams):
    if params.potential == "none":
        return ()
    if params.potential == "V1":
        return tuple(range(grid.ndim))
    if grid.geometry == "radial":
        raise ModelError("V2 needs a grid with a separate x_n axis")
    return tuple(range(grid.ndim - 1))


def potential_array(grid: GridSpec, params: ModelParams) -> np.ndarray:
    if params.potential == "none":
        return np.zeros(grid.shape)
    if params.potential == "V1":
        return params.potential_scale * grid.r2
    return params.potential_scale * grid.r2_transverse


# --------------------------------------------------------------------------
# scalar functionals

def interaction_K(pair: FieldPair) -> float:
    return float(integrate(pair.u ** 2 * np.conj(pair.v), pair.grid).real)


def mass_Q(pair: FieldPair) -> float:
    return norm2(pair.u, pair.grid) + 2.0 * norm2(pair.v, pair.grid)


def potential_term(pair: FieldPair, params: ModelParams) -> float:
    V = potential_array(pair.grid, params)
    return float(integrate(V * (np.abs(pair.u) ** 2 + np.abs(pair.v) ** 2), pair.grid).real)


def _parts(pair: FieldPair, params: ModelParams):
    g = pair.grid
    ku = dirichlet(pair.u, g)
    kv = dirichlet(pair.v, g)
    V = potential_array(g, params)
    pu = float(integrate(V * np.abs(pair.u) ** 2, g).real)
    pv = float(integrate(V * np.abs(pair.v) ** 2, g).real)
    K = interaction_K(pair) if params.interaction else 0.0
    return ku, kv, pu, pv, K


def energy_I(pair: FieldPair, params: ModelParams) -> float:
    ku, kv, pu, pv, K = _parts(pair, params)
    return 0.5 * (ku + params.kappa * kv) + 0.5 * (pu + pv) - 0.5 * K


def energy_E(pair: FieldPair, params: ModelParams) -> float:
    ku, kv, pu, pv, K = _parts(pair, params)
    return ku + params.kappa * kv + pu + pv - K


def pohozaev_B(pair: FieldPair, params: ModelParams) -> float:
    ku, kv, pu, pv, K = _parts(pair, params)
    return ku + params.kappa * kv - (pu + pv) - params.n / 4.0 * K


def axial_virial_N1(pair: FieldPair, params: ModelParams) -> float:
    g = pair.grid
    if g.geometry == "radial":
        raise ModelError("N1 needs a grid with an x_n axis")
    ax = [g.free_axis]
    K = interaction_K(pair) if params.interaction else 0.0
    return dirichlet(pair.u, g, ax) + params.kappa * dirichlet(pair.v, g, ax) - 0.25 * K


def virial_moment(pair: FieldPair, params: ModelParams) -> float:
    g = pair.grid
    dens = np.abs(pair.u) ** 2 + np.abs(pair.v) ** 2 / params.kappa
    return float(integrate(g.r2 * dens, g).real)


def virial_rhs(pair: FieldPair, params: ModelParams, E0: float) -> float:
    """Second time derivative of the virial moment, valid only at kappa = 1/2."""
    if abs(params.kappa - 0.5) > 1e-14:
        raise ModelError("virial identity is closed only for kappa = 1/2")
    K = interaction_K(pair) if params.interaction else 0.0
    return 8.0 * E0 + 2.0 * (4 - params.n) * K - 16.0 * potential_term(pair, params)


def virial_cross_term(pair: FieldPair) -> float:
    """Im int |x|^2 u2 conj(u1)^2; its time derivative enters the identity when kappa != 1/2."""
    g = pair.grid
    return float(integrate(g.r2 * pair.v * np.conj(pair.u) ** 2, g).imag)


def gn_quotient(pair: FieldPair, params: ModelParams) -> float:
    """(|grad u|^2 + kappa|grad v|^2)^{n/4} Q^{(6-n)/4} / K  (invariant under mass-preserving dilations)."""
    K = interaction_K(pair)
    if not K > 0:
        raise ModelError("GN quotient needs K > 0")
    n = params.n
    kin = dirichlet(pair.u, pair.grid) + params.kappa * dirichlet(pair.v, pair.grid)
    return kin ** (n / 4.0) * mass_Q(pair) ** ((6.0 - n) / 4.0) / K


def printed_gn_constant(n: int, Q_soliton: float) -> float:
    """Closed-form minimal value as printed next to the GN quotient (reported for comparison)."""
    return n ** (n / 4.0) * (6.0 - n) ** (1.0 - n / 4.0) / 2.0 * math.sqrt(Q_soliton)


def heisenberg_check(field, grid: GridSpec, params: ModelParams):
    """(int|f|^2, (2/n)||grad f|| ||x f||); the first never exceeds the second."""
    lhs = norm2(field, grid)
    grad = math.sqrt(max(dirichlet(field, grid), 0.0))
    mom = math.sqrt(float(integrate(grid.r2 * np.abs(field) ** 2, grid).real))
    return lhs, 2.0 / params.n * grad * mom


# --------------------------------------------------------------------------
# report

@dataclass
class FunctionalReport:
    mu1: float
    mu2: float
    Q: float
    kinetic_u: float
    kinetic_v: float
    potential_u: float
    potential_v: float
    K: float
    I: float
    E: float
    B: float
    N1: float | None
    moment: float
    J: float | None
    kappa: float

    def I_from_parts(self) -> float:
        return (0.5 * (self.kinetic_u + self.kappa * self.kinetic_v)
                + 0.5 * (self.potential_u + self.potential_v) - 0.5 * self.K)

    def to_dict(self) -> dict:
        return {
            "masses.mu1": self.mu1,
            "masses.mu2": self.mu2,
            "masses.Q": self.Q,
            "kinetic.u": self.kinetic_u,
            "kinetic.v": self.kinetic_v,
            "potential.u": self.potential_u,
            "potential.v": self.potential_v,
            "interaction.K": self.K,
            "energy.I": self.I,
            "energy.E": self.E,
            "pohozaev.B": self.B,
            "virial.N1": self.N1,
            "virial.moment": self.moment,
            "gn.J": self.J,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def report(pair: FieldPair, params: ModelParams) -> FunctionalReport:
    g = pair.grid
    ku, kv, pu, pv, K = _parts(pair, params)
    I = 0.5 * (ku + params.kappa * kv) + 0.5 * (pu + pv) - 0.5 * K
    E = ku + params.kappa * kv + pu + pv - K
    B = ku + params.kappa * kv - (pu + pv) - params.n / 4.0 * K
    N1 = axial_virial_N1(pair, params) if g.geometry != "radial" else None
    J = gn_quotient(pair, params) if K > 0 else None
    return FunctionalReport(norm2(pair.u, g), norm2(pair.v, g), mass_Q(pair), ku, kv, pu, pv,
                            K, I, E, B, N1, virial_moment(pair, params), J, params.kappa)


# --------------------------------------------------------------------------
# Steiner rearrangement along x_n

def _symmetric_order(axis) -> np.ndarray:
    """Grid indices ordered by |x_n|, ties broken by grid order."""
    x = axis.x
    return np.lexsort((np.arange(x.size), np.round(np.abs(x) / axis.h).astype(int)))


def rearrange_line(values: np.ndarray, axis, along: int = -1) -> np.ndarray:
    a = np.moveaxis(np.abs(values), along, -1)
    srt = -np.sort(-a, axis=-1)
    out = np.empty_like(srt)
    out[..., _symmetric_order(axis)] = srt
    return np.moveaxis(out, -1, along)


def steiner_rearrange_axial(pair: FieldPair) -> FieldPair:
    g = pair.grid
    if g.geometry == "radial":
        raise ModelError("axial rearrangement needs an x_n axis")
    ax = g.axes[g.free_axis]
    return FieldPair(rearrange_line(pair.u, ax), rearrange_line(pair.v, ax), g)
