"""Strang-split time integration of the quadratic system

    i u1_t = -Lap u1 + V u1 - u2 conj(u1)
    i u2_t = -kappa Lap u2 + V u2 - u1^2 / 2

with the linear flow applied exactly in the eigenbasis of -c Lap + V and the
pointwise nonlinear flow integrated by RK4.
"""
from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid import FieldPair, GridSpec, dirichlet
from .functionals import (ModelParams, check_dim, potential_axes, potential_array, mass_Q, energy_E, energy_I,
                          virial_moment, virial_rhs, virial_cross_term,
                          axial_virial_N1)
from .operators import SeparableOperator


class DynamicsError(RuntimeError):
    """Runtime abort (NaN, field reaching the box edge)."""

    def __init__(self, msg, series=None):
        super().__init__(msg)
        self.series = series


VERDICTS = ("completed", "blowup_detected", "dt_floor_hit")
CSV_HEADER = "t,Q,E,grad_u,grad_v,virial,N1"


@dataclass
class EvolveConfig:
    dt: float = 1e-3
    T: float = 1.0
    scheme: str = "strang"
    substeps: int = 1
    adaptive: bool = True
    dt_floor: float | None = None      # default dt / 2**16
    gmax_factor: float = 1e3           # threshold on ||grad|| relative to t = 0
    stride: int = 10
    invariant_tol: float = 1e-8
    energy_tol: float | None = 1e-5    # per-step |dE| / |E0|; None disables
    boundary_tol: float = 1e-6

    def __post_init__(self):
        if not self.dt > 0 or not self.T > 0:
            raise ValueError("dt and T must be positive")
        if self.dt > self.T:
            raise ValueError("dt must not exceed T")
        if self.scheme != "strang":
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.substeps < 1 or self.stride < 1:
            raise ValueError("substeps and stride must be >= 1")
        if self.dt_floor is None:
            self.dt_floor = self.dt / 2 ** 16
        if not 0 < self.dt_floor < self.dt:
            raise ValueError("dt_floor must lie in (0, dt)")
        if not self.gmax_factor > 1:
            raise ValueError("gmax_factor must exceed 1")


@dataclass
class TimeSeries:
    t: list = field(default_factory=list)
    Q: list = field(default_factory=list)
    E: list = field(default_factory=list)
    grad_u: list = field(default_factory=list)
    grad_v: list = field(default_factory=list)
    virial: list = field(default_factory=list)
    N1: list = field(default_factory=list)
    virial_rhs: list = field(default_factory=list)
    cross: list = field(default_factory=list)
    verdict: str = "completed"
    t_star: float | None = None
    final: FieldPair | None = None
    steps: int = 0
    dt_min: float = float("nan")

    def append(self, t, pair, params, E0):
        g = pair.grid
        self.t.append(float(t))
        self.Q.append(mass_Q(pair))
        self.E.append(energy_E(pair, params))
        self.grad_u.append(dirichlet(pair.u, g))
        self.grad_v.append(dirichlet(pair.v, g))
        self.virial.append(virial_moment(pair, params))
        self.N1.append(axial_virial_N1(pair, params) if g.geometry != "radial" else float("nan"))
        if abs(params.kappa - 0.5) < 1e-14:
            self.virial_rhs.append(virial_rhs(pair, params, E0))
        else:
            self.virial_rhs.append(float("nan"))
        self.cross.append(virial_cross_term(pair))

    def array(self, name) -> np.ndarray:
        return np.asarray(getattr(self, name))

    def drift(self, name) -> float:
        a = self.array(name)
        return float(np.max(np.abs(a - a[0])) / max(abs(a[0]), 1e-300))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for row in zip(self.t, self.Q, self.E, self.grad_u, self.grad_v, self.virial, self.N1):
            buf.write(",".join(repr(float(x)) for x in row) + "\n")
        return buf.getvalue()

    def summary(self) -> dict:
        return {"verdict": self.verdict, "t_star": self.t_star, "t_final": self.t[-1] if self.t else None,
                "Q_drift": self.drift("Q") if self.t else None,
                "E_drift": self.drift("E") if self.t else None,
                "steps": self.steps, "dt_min": self.dt_min}


# --------------------------------------------------------------------------
# split steps

class LinearPropagator:
    """exp(-i A_j dt) for A_1 = -Lap + V and A_2 = -kappa Lap + V, with phases cached per dt."""

    def __init__(self, grid: GridSpec, params: ModelParams):
        check_dim(grid, params)
        axes = potential_axes(grid, params)
        s = params.potential_scale if params.potential != "none" else 0.0
        self.grid = grid
        self.ops = (SeparableOperator(grid, 1.0, s, axes), SeparableOperator(grid, params.kappa, s, axes))
        self._cache = {}

    def _phases(self, dt):
        ph = self._cache.get(dt)
        if ph is None:
            ph = tuple(np.exp(-1j * op.evals * dt) for op in self.ops)
            if len(self._cache) > 32:
                self._cache.clear()
            self._cache[dt] = ph
        return ph

    def __call__(self, u, v, dt):
        pu, pv = self._phases(dt)
        return self.ops[0].apply_function(u, pu), self.ops[1].apply_function(v, pv)


def linear_step(pair: FieldPair, params: ModelParams, dt: float, prop: LinearPropagator | None = None) -> FieldPair:
    prop = prop or LinearPropagator(pair.grid, params)
    u, v = prop(np.asarray(pair.u, complex), np.asarray(pair.v, complex), dt)
    return FieldPair(u, v, pair.grid)


def _rhs(u, v):
    return 1j * v * np.conj(u), 0.5j * u * u


def _rk4(u, v, dt, substeps):
    h = dt / substeps
    for _ in range(substeps):
        k1u, k1v = _rhs(u, v)
        k2u, k2v = _rhs(u + 0.5 * h * k1u, v + 0.5 * h * k1v)
        k3u, k3v = _rhs(u + 0.5 * h * k2u, v + 0.5 * h * k2v)
        k4u, k4v = _rhs(u + h * k3u, v + h * k3v)
        u = u + h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        v = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return u, v


def pointwise_invariant(u, v):
    return np.abs(u) ** 2 + 2 * np.abs(v) ** 2


def nonlinear_step(pair: FieldPair, dt: float, substeps: int = 1) -> FieldPair:
    u, v = _rk4(np.asarray(pair.u, complex), np.asarray(pair.v, complex), dt, substeps)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise FloatingPointError("nonlinear step overflowed")
    return FieldPair(u, v, pair.grid)


def strang_step(u, v, dt, prop, substeps=1, interaction=True):
    u, v = prop(u, v, 0.5 * dt)
    if interaction:
        u, v = _rk4(u, v, dt, substeps)
    return prop(u, v, 0.5 * dt)


def step_many(pair: FieldPair, params: ModelParams, dt: float, nsteps: int, substeps: int = 1) -> FieldPair:
    """Fixed-step Strang integration; dt may be negative (time reversal)."""
    prop = LinearPropagator(pair.grid, params)
    u, v = np.asarray(pair.u, complex), np.asarray(pair.v, complex)
    for _ in range(nsteps):
        u, v = strang_step(u, v, dt, prop, substeps, params.interaction)
    return FieldPair(u, v, pair.grid)


# --------------------------------------------------------------------------
# driver

def evolve(pair0: FieldPair, params: ModelParams, config: EvolveConfig | None = None,
           callback=None, callback_stride: int = 0) -> TimeSeries:
    """Integrate to T or until a verdict; ``callback(step, t, pair)`` fires every ``callback_stride`` steps."""
    config = config or EvolveConfig()
    g = pair0.grid
    if not mass_Q(pair0) > 0:
        raise ValueError("initial data must have positive mass")
    prop = LinearPropagator(g, params)
    u, v = np.asarray(pair0.u, complex).copy(), np.asarray(pair0.v, complex).copy()
    E0 = energy_E(pair0, params)
    Vpot = potential_array(g, params)
    w = g.weights

    def energy_parts(a, b):
        ku, kv = dirichlet(a, g), dirichlet(b, g)
        au, av = np.abs(a) ** 2, np.abs(b) ** 2
        E = ku + params.kappa * kv + float(np.sum(w * Vpot * (au + av)))
        if params.interaction:
            E -= float(np.sum(w * (a * a * np.conj(b)).real))
        return ku + kv, E

    ts = TimeSeries()
    ts.append(0.0, pair0, params, E0)
    g0 = math.sqrt(ts.grad_u[0] + ts.grad_v[0])
    gmax = config.gmax_factor * g0
    t, dt, nstep = 0.0, config.dt, 0
    dt_min = dt
    E_last = E0
    Escale = max(abs(E0), 1e-300)
    T = config.T
    while t < T * (1 - 1e-14):
        h = min(dt, T - t)
        while True:
            a, b = prop(u, v, 0.5 * h)
            q0 = pointwise_invariant(a, b)
            if params.interaction:
                a2, b2 = _rk4(a, b, h, config.substeps)
            else:
                a2, b2 = a, b
            finite = bool(np.all(np.isfinite(a2)) and np.all(np.isfinite(b2)))
            ok = finite
            if finite:
                drift = float(np.max(np.abs(pointwise_invariant(a2, b2) - q0))) / max(float(q0.max()), 1e-300)
                un, vn = prop(a2, b2, 0.5 * h)
                kin, E = energy_parts(un, vn)
                ok = drift <= config.invariant_tol
                if config.energy_tol is not None:
                    ok = ok and abs(E - E_last) <= config.energy_tol * Escale
            if not config.adaptive or ok:
                break
            h *= 0.5
            dt = h
            dt_min = min(dt_min, h)
            if h < config.dt_floor:
                ts.verdict, ts.t_star = "dt_floor_hit", t
                ts.final, ts.steps, ts.dt_min = FieldPair(u, v, g), nstep, dt_min
                return ts
        if not finite:
            ts.final, ts.steps = FieldPair(u, v, g), nstep
            raise DynamicsError(f"non-finite field after t = {t:.6g}", ts)
        u, v, E_last = un, vn, E
        t += h
        nstep += 1
        pair = FieldPair(u, v, g)
        if callback is not None and callback_stride > 0 and nstep % callback_stride == 0:
            callback(nstep, t, pair)
        hit = math.sqrt(kin) > gmax
        if nstep % config.stride == 0 or hit or t >= T * (1 - 1e-14):
            ts.append(t, pair, params, E0)
            br = max(g.boundary_ratio(u), g.boundary_ratio(v))
            if br > config.boundary_tol:
                warnings.warn(f"field reached the box edge (ratio {br:.2e}) at t = {t:.6g}")
                ts.final, ts.steps, ts.dt_min = pair, nstep, dt_min
                raise DynamicsError(f"boundary amplitude ratio {br:.2e} exceeds {config.boundary_tol:g}", ts)
        if hit:
            ts.verdict, ts.t_star = "blowup_detected", t
            break
    ts.final, ts.steps, ts.dt_min = FieldPair(u, v, g), nstep, dt_min
    return ts


def _thin(t, V, min_spacing):
    keep = [0]
    for i in range(1, t.size):
        if t[i] - t[keep[-1]] >= min_spacing:
            keep.append(i)
    return t[keep], V[keep]


def virial_second_derivative(ts: TimeSeries, min_spacing: float = 0.0):
    """Second divided differences of the virial moment on the (possibly uneven) sample times.

    Samples closer than ``min_spacing`` are dropped first; very dense samples
    (after dt halving) would otherwise amplify roundoff.
    """
    t, V = ts.array("t"), ts.array("virial")
    if min_spacing > 0:
        t, V = _thin(t, V, min_spacing)
    if t.size < 3:
        return t[:0], V[:0]
    dt = np.diff(t)
    d2 = 2 * ((V[2:] - V[1:-1]) / dt[1:] - (V[1:-1] - V[:-2]) / dt[:-1]) / (dt[1:] + dt[:-1])
    return t[1:-1], d2


def is_concave(ts: TimeSeries, min_spacing: float | None = None) -> bool:
    """Strict concavity of the virial trace on samples at least ``min_spacing`` apart
    (default: 1% of the run length)."""
    if min_spacing is None:
        min_spacing = 0.01 * ts.t[-1]
    _, d2 = virial_second_derivative(ts, min_spacing)
    return bool(d2.size > 0 and np.all(d2 < 0))


def is_monotone_decreasing(ts: TimeSeries) -> bool:
    return bool(np.all(np.diff(ts.array("virial")) < 0))


# --------------------------------------------------------------------------
# verdict helpers

def global_threshold_check(pair0: FieldPair, soliton) -> dict:
    params = soliton.params
    Qs = mass_Q(soliton.pair)
    q = mass_Q(pair0)
    thr = params.n / 4.0 * Qs
    return {"Q": q, "threshold": thr, "ratio": q / thr, "below_threshold": bool(q < thr)}


def blowup_class_check(pair0: FieldPair, params: ModelParams, reference) -> dict:
    """Membership in {I < I(reference) and N1 < 0}."""
    I0 = energy_I(pair0, params)
    Iref = float(reference.I)
    N1 = axial_virial_N1(pair0, params)
    return {"I": I0, "I_reference": Iref, "N1": N1, "in_M": bool(I0 < Iref and N1 < 0)}


def blowup_data(soliton, mu: float, lam: float) -> FieldPair:
    """mu * lam^2 * Q(lam x) on the soliton's grid (interpolated along each axis)."""
    from .groundstate import _interp_dilate
    g = soliton.pair.grid
    u = mu * lam ** 2 * _interp_dilate(np.real(soliton.pair.u), g, lam)
    v = mu * lam ** 2 * _interp_dilate(np.real(soliton.pair.v), g, lam)
    return FieldPair(u, v, g)


def blowup_lambda_min(soliton, mu: float) -> float:
    """Smallest lam with E(mu lam^2 Q(lam .)) < 0 under V1 (continuum scaling)."""
    from .functionals import potential_term
    if not mu > 1:
        raise ValueError("needs mu > 1")
    pair, p = soliton.pair, soliton.params
    kin = dirichlet(pair.u, pair.grid) + p.kappa * dirichlet(pair.v, pair.grid)
    mom = potential_term(pair, ModelParams(p.n, p.kappa, "V1"))
    # n = 4: E = mu^2 lam^2 kin (1 - mu) + mu^2 lam^-2 mom, using K = kin at the soliton
    return (mom / ((mu - 1) * kin)) ** 0.25


# --------------------------------------------------------------------------
# Mehler kernel cross-check for V = |x|^2 in 1D

def mehler_apply(f, grid: GridSpec, t: float, omega: float = 2.0) -> np.ndarray:
    """Kernel quadrature of exp(-iHt) f for H = -d^2 + (omega/2)^2 x^2.

    omega = 2 is H = -d^2 + x^2, the operator the propagator uses.
    """
    x = grid.axes[0].x
    h = grid.axes[0].h
    s, c = math.sin(omega * t), math.cos(omega * t)
    a = omega / 2.0
    pref = np.sqrt(a / (2j * math.pi * s))
    X, Y = np.meshgrid(x, x, indexing="ij")
    K = pref * np.exp(1j * a * ((X ** 2 + Y ** 2) * c - 2 * X * Y) / (2 * s))
    return K @ f * h


def calibrate_mehler(grid: GridSpec, t: float, f=None, candidates=(2.0, math.sqrt(2.0))):
    """Compare the eigenbasis propagator with the kernel at each candidate frequency."""
    if grid.ndim != 1 or grid.geometry != "cartesian":
        raise ValueError("kernel check runs on a 1D periodic grid")
    x = grid.axes[0].x
    if f is None:
        f = np.exp(-(x - 0.5) ** 2) * (1 + 0.3j * x)
    op = SeparableOperator(grid, 1.0, 1.0, (0,))
    ref = op.propagate(f, t)
    errs = {}
    for w in candidates:
        k = mehler_apply(f, grid, t, w)
        errs[float(w)] = float(np.sqrt(np.sum(np.abs(k - ref) ** 2) / np.sum(np.abs(ref) ** 2)))
    best = min(errs, key=errs.get)
    return best, errs
