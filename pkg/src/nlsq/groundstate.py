"""Constrained minimisation: normalised ground states, free solitons, the scaled curve.

All solvers work on real nonnegative fields.  Descent directions are
preconditioned with a shifted inverse of the linear part, applied exactly in
the separable eigenbasis of the grid (see ``operators``).  Every accepted step
decreases the objective.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .grid import FieldPair, GridSpec, integrate, laplacian_apply, dirichlet, norm2
from .functionals import (ModelParams, ModelError, potential_array, potential_axes, interaction_K,
                          energy_I, pohozaev_B, steiner_rearrange_axial, check_dim)
from .operators import SeparableOperator

log = logging.getLogger(__name__)

CONSTRAINTS = ("product", "ellipse", "sphere_weighted")
INITIALIZERS = ("gaussian_product", "eigenmode_product", "file", "custom")


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class ConstraintSpec:
    kind: str
    mu1: float = 0.0
    mu2: float = 0.0
    w: float = 1.0
    mu: float = 0.0
    N2: float = 0.0
    ball_cap: float | None = None

    def __post_init__(self):
        if self.kind not in CONSTRAINTS:
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if self.kind == "product" and not (self.mu1 > 0 and self.mu2 > 0):
            raise ValueError("product constraint needs mu1, mu2 > 0")
        if self.kind == "ellipse" and not (self.w > 0 and self.mu > 0):
            raise ValueError("ellipse constraint needs w, mu > 0")
        if self.kind == "sphere_weighted" and not self.N2 > 0:
            raise ValueError("sphere constraint needs N2 > 0")
        if self.ball_cap is not None and not self.ball_cap > 0:
            raise ValueError("ball cap must be positive")

    @classmethod
    def product(cls, mu1, mu2, ball_cap=None):
        return cls("product", mu1=mu1, mu2=mu2, ball_cap=ball_cap)

    @classmethod
    def ellipse(cls, w, mu, ball_cap=None):
        return cls("ellipse", w=w, mu=mu, ball_cap=ball_cap)

    @classmethod
    def sphere(cls, N2, ball_cap=None):
        return cls("sphere_weighted", N2=N2, ball_cap=ball_cap)

    def groups(self, kappa: float):
        """Constraint rows (a, b, target) meaning a*||u||^2 + b*||v||^2 = target."""
        if self.kind == "product":
            return [(1.0, 0.0, self.mu1), (0.0, 1.0, self.mu2)]
        if self.kind == "ellipse":
            return [(1.0, 2.0 * self.w, self.mu)]
        return [(1.0, kappa, self.N2)]


@dataclass
class SolverConfig:
    dt: float = 1.0
    grad_tol: float = 1e-8
    constraint_tol: float = 1e-12
    max_iter: int = 5000
    backtrack: float = 0.5
    seed: int = 0
    initializer: str = "eigenmode_product"
    init_width: float = 2.0        # axial Gaussian width of the initializer
    init_ratio: float = 1.0        # amplitude of v relative to u before projection
    noise: float = 0.0             # relative positive multiplicative noise on the initializer
    init_pair: FieldPair | None = None
    recenter: bool = True
    precondition: bool = True

    def __post_init__(self):
        if not (self.dt > 0 and self.grad_tol > 0 and self.constraint_tol > 0):
            raise ValueError("step and tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.initializer not in INITIALIZERS:
            raise ValueError(f"unknown initializer {self.initializer!r}")


@dataclass
class GroundStateResult:
    pair: FieldPair
    I: float
    lambda1: float
    lambda2: float
    pohozaev: float
    grad_residual: float
    iterations: int
    converged: bool
    constraint: str
    params: ModelParams | None = None
    extra: dict = field(default_factory=dict)

    def sidecar(self) -> dict:
        return {
            "constraint": self.constraint,
            "params": asdict(self.params) if self.params is not None else None,
            "I": self.I,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "residuals": {"gradient": self.grad_residual, "pohozaev": self.pohozaev},
            "iterations": self.iterations,
            "converged": self.converged,
            "extra": {k: v for k, v in self.extra.items() if isinstance(v, (int, float, str, bool, type(None)))},
        }

    def sidecar_json(self) -> str:
        return json.dumps(self.sidecar(), indent=2)


# --------------------------------------------------------------------------
# gradient and projection

def variational_gradient(pair: FieldPair, params: ModelParams, V=None):
    g = pair.grid
    V = potential_array(g, params) if V is None else V
    u, v = pair.u, pair.v
    gu = -laplacian_apply(u, g) + V * u
    gv = -params.kappa * laplacian_apply(v, g) + V * v
    if params.interaction:
        gu = gu - np.conj(u) * v
        gv = gv - 0.5 * u ** 2
    return gu, gv


def project_constraint(pair: FieldPair, spec: ConstraintSpec, kappa: float = 1.0) -> FieldPair:
    g = pair.grid
    nu, nv = norm2(pair.u, g), norm2(pair.v, g)
    if spec.kind == "product":
        if nu == 0 or nv == 0:
            raise SolverError("product constraint needs both components nonzero")
        return pair.scaled(math.sqrt(spec.mu1 / nu), math.sqrt(spec.mu2 / nv))
    (a, b, target), = spec.groups(kappa)
    c = a * nu + b * nv
    if c == 0:
        raise SolverError("cannot project the zero pair")
    s = math.sqrt(target / c)
    return pair.scaled(s, s)


def constraint_residual(pair: FieldPair, spec: ConstraintSpec, kappa: float = 1.0) -> float:
    nu, nv = norm2(pair.u, pair.grid), norm2(pair.v, pair.grid)
    return max(abs(a * nu + b * nv - t) / t for a, b, t in spec.groups(kappa))


def multipliers(pair: FieldPair, params: ModelParams):
    """(lambda1, lambda2) from testing the system against (u, v)."""
    g = pair.grid
    V = potential_array(g, params)
    ku, kv = dirichlet(pair.u, g), dirichlet(pair.v, g)
    pu = float(integrate(V * np.abs(pair.u) ** 2, g).real)
    pv = float(integrate(V * np.abs(pair.v) ** 2, g).real)
    K = interaction_K(pair) if params.interaction else 0.0
    mu1, mu2 = norm2(pair.u, g), norm2(pair.v, g)
    lam1 = (ku + pu - K) / mu1
    lam2 = (params.kappa * kv + pv - 0.5 * K) / mu2
    printed = (ku + pu - 0.5 * K) / mu1
    return lam1, lam2, printed


def system_residual(pair: FieldPair, params: ModelParams, lam1, lam2, relative=True) -> float:
    gu, gv = variational_gradient(pair, params)
    ru, rv = gu - lam1 * pair.u, gv - lam2 * pair.v
    g = pair.grid
    res = math.sqrt(norm2(ru, g) + norm2(rv, g))
    if relative:
        res /= math.sqrt(norm2(pair.u, g) + norm2(pair.v, g))
    return res


def hdot_norm2(pair: FieldPair, params: ModelParams) -> float:
    """||grad u||^2 + ||grad v||^2 + int V(|u|^2 + |v|^2)."""
    g = pair.grid
    V = potential_array(g, params)
    return (dirichlet(pair.u, g) + dirichlet(pair.v, g)
            + float(integrate(V * (np.abs(pair.u) ** 2 + np.abs(pair.v) ** 2), g).real))


# --------------------------------------------------------------------------
# helpers shared by the solvers

def fourier_shift(f, grid: GridSpec, axis: int, s: float):
    """f(x - s) along a periodic axis (exact for band-limited data)."""
    k = grid.axes[axis].k
    shp = [1] * grid.ndim
    shp[axis] = k.size
    out = np.fft.ifft(np.fft.fft(f, axis=axis) * np.exp(-1j * k * s).reshape(shp), axis=axis)
    return out.real if np.isrealobj(f) else out


def axial_centroid(f, grid: GridSpec, axis: int) -> float:
    """Circular mass centroid of |f|^2 along a periodic axis."""
    ax = grid.axes[axis]
    dens = np.abs(f) ** 2 * grid.weights
    prof = np.sum(dens, axis=tuple(i for i in range(grid.ndim) if i != axis))
    theta = np.pi * ax.x / ax.L
    z = np.sum(prof * np.exp(1j * theta))
    return float(np.angle(z) * ax.L / np.pi)


def recenter_pair(pair: FieldPair, axis: int) -> FieldPair:
    s = axial_centroid(pair.u, pair.grid, axis)
    if abs(s) < 1e-14:
        return pair
    return FieldPair(fourier_shift(pair.u, pair.grid, axis, -s),
                     fourier_shift(pair.v, pair.grid, axis, -s), pair.grid)


def _translation_free_axes(grid: GridSpec, params: ModelParams):
    if grid.geometry == "radial" or params.potential == "V1":
        return []
    if params.potential == "V2":
        return [grid.free_axis]
    return [i for i, a in enumerate(grid.axes) if a.kind == "periodic"]


def _gaussian_init(grid: GridSpec, params: ModelParams, width: float, kappa_v: float):
    pot = set(potential_axes(grid, params))
    u = np.ones(grid.shape)
    v = np.ones(grid.shape)
    for i in range(grid.ndim):
        x = grid.mesh(i)
        if i in pot:
            u = u * np.exp(-x ** 2 / 2.0)
            v = v * np.exp(-x ** 2 / (2.0 * math.sqrt(kappa_v)))
        else:
            u = u * np.exp(-x ** 2 / (2.0 * width ** 2))
            v = v * np.exp(-x ** 2 / (2.0 * width ** 2))
    return u, v


def _eigenmode_init(grid, params, width, Hu, Hv):
    pot = set(potential_axes(grid, params))
    u = np.ones(grid.shape)
    v = np.ones(grid.shape)
    for i in range(grid.ndim):
        x = grid.mesh(i)
        shp = [1] * grid.ndim
        shp[i] = grid.axes[i].m
        if i in pot:
            for op, name in ((Hu, "u"), (Hv, "v")):
                b = op.bases[i]
                e = b.vecs[:, 0] / (b.sqrtw if b.sqrtw is not None else 1.0)
                e = np.abs(e).reshape(shp)
                if name == "u":
                    u = u * e
                else:
                    v = v * e
        else:
            gx = np.exp(-x ** 2 / (2.0 * width ** 2))
            u = u * gx
            v = v * gx
    return u, v


def initial_pair(grid, params, config: SolverConfig, Hu=None, Hv=None) -> FieldPair:
    if config.initializer in ("file", "custom"):
        if config.init_pair is None:
            raise SolverError("initializer needs init_pair")
        if config.init_pair.grid.shape != grid.shape:
            raise SolverError("init_pair lives on a different grid")
        u, v = np.abs(config.init_pair.u), np.abs(config.init_pair.v)
    elif config.initializer == "eigenmode_product" and Hu is not None:
        u, v = _eigenmode_init(grid, params, config.init_width, Hu, Hv)
    else:
        u, v = _gaussian_init(grid, params, config.init_width, params.kappa)
    v = config.init_ratio * v
    if not (np.any(u) and np.any(v)):
        raise SolverError("zero initializer rejected")
    if config.noise > 0:
        rng = np.random.default_rng(config.seed)
        u = u * (1.0 + config.noise * rng.random(grid.shape))
        v = v * (1.0 + config.noise * rng.random(grid.shape))
    pair = FieldPair(u.astype(float), v.astype(float), grid)
    if grid.geometry != "radial":
        pair = steiner_rearrange_axial(pair)
    if interaction_K(pair) <= 0:
        rng = np.random.default_rng(config.seed)
        c = 0.1 * rng.random()
        bump = np.exp(-grid.r2 / 2.0 - c)
        pair = FieldPair(pair.u + bump, pair.v + bump, grid)
    return pair


# --------------------------------------------------------------------------
# normalised ground states

class _Energy:
    """I, its L2 gradient and parts, evaluated together (real fields)."""

    def __init__(self, grid, params):
        self.grid = grid
        self.params = params
        self.V = potential_array(grid, params)
        self.w = grid.weights

    def __call__(self, u, v):
        g, p, w = self.grid, self.params, self.w
        lu = laplacian_apply(u, g)
        lv = laplacian_apply(v, g)
        ku = -np.sum(w * u * lu)
        kv = -np.sum(w * v * lv)
        pu = np.sum(w * self.V * u * u)
        pv = np.sum(w * self.V * v * v)
        K = np.sum(w * u * u * v) if p.interaction else 0.0
        I = 0.5 * (ku + p.kappa * kv) + 0.5 * (pu + pv) - 0.5 * K
        gu = -lu + self.V * u
        gv = -p.kappa * lv + self.V * v
        if p.interaction:
            gu = gu - u * v
            gv = gv - 0.5 * u * u
        return float(I), gu, gv, (ku, kv, pu, pv, K)

    def increment(self, u, v, gu, gv, a, b):
        """I(u+a, v+b) - I(u, v) expanded exactly (I is a cubic polynomial), free of cancellation."""
        g, p, w = self.grid, self.params, self.w
        Aa = -np.sum(w * a * laplacian_apply(a, g)) + np.sum(w * self.V * a * a)
        Bb = -p.kappa * np.sum(w * b * laplacian_apply(b, g)) + np.sum(w * self.V * b * b)
        out = np.sum(w * (gu * a + gv * b)) + 0.5 * (Aa + Bb)
        if p.interaction:
            out -= 0.5 * np.sum(w * (a * a * v + 2.0 * u * a * b + a * a * b))
        return float(out)


def _gram_solve(G, rhs):
    return np.linalg.solve(np.atleast_2d(G), np.atleast_1d(rhs))


def solve_groundstate(params: ModelParams, spec: ConstraintSpec, grid: GridSpec,
                      config: SolverConfig | None = None) -> GroundStateResult:
    """Minimise I on the constraint manifold by preconditioned projected gradient descent."""
    config = config or SolverConfig()
    check_dim(grid, params)
    kappa = params.kappa
    pot_axes = potential_axes(grid, params)
    Hu = SeparableOperator(grid, 1.0, params.potential_scale, pot_axes)
    Hv = SeparableOperator(grid, kappa, params.potential_scale, pot_axes)
    if spec.ball_cap is not None:
        l0 = Hu.ground
        if spec.kind == "product" and spec.mu1 + spec.mu2 > spec.ball_cap / (params.eps0 * l0):
            raise SolverError("ball cap infeasible: mu1 + mu2 > chi / (eps0 * l0)")
    cap = None if spec.ball_cap is None else spec.ball_cap / params.eps0

    energy = _Energy(grid, params)
    w = grid.weights
    groups = spec.groups(kappa)

    def ip(a, b):
        return float(np.sum(w * a * b))

    pair = project_constraint(initial_pair(grid, params, config, Hu, Hv), spec, kappa)
    if cap is not None and hdot_norm2(pair, params) > cap:
        raise SolverError("initializer lies outside the ball cap; shrink the mass or widen the cap")
    u, v = pair.u, pair.v
    I, gu, gv, parts = energy(u, v)
    tau = config.dt
    it = 0
    res = np.inf
    converged = False
    cap_active = False
    history = [I]
    stalls = 0
    for it in range(1, config.max_iter + 1):
        # Lagrange multipliers by L2 least squares against the constraint normals
        normals = [(a * u, b * v) for a, b, _ in groups]
        G = np.array([[ip(n1[0], n2[0]) + ip(n1[1], n2[1]) for n2 in normals] for n1 in normals])
        rhs = np.array([ip(n[0], gu) + ip(n[1], gv) for n in normals])
        Lam = _gram_solve(G, rhs)
        ru = gu - sum(L * n[0] for L, n in zip(Lam, normals))
        rv = gv - sum(L * n[1] for L, n in zip(Lam, normals))
        res = math.sqrt((ip(ru, ru) + ip(rv, rv)) / (ip(u, u) + ip(v, v)))
        if res < config.grad_tol:
            converged = True
            break
        lam1 = sum(L * a for L, (a, b, _) in zip(Lam, groups))
        lam2 = sum(L * b for L, (a, b, _) in zip(Lam, groups))
        if config.precondition:
            su = min(lam1, Hu.ground - 1e-10 * (1 + abs(Hu.ground)))
            sv = min(lam2, Hv.ground - 1e-10 * (1 + abs(Hv.ground)))
            if spec.kind != "product":
                # a single constraint couples both components; keep the shifts consistent
                su = min(su, Hu.ground - 1e-3)
                sv = min(sv, Hv.ground - 1e-3)
            Pu = lambda f, s=su: Hu.solve_shifted(f, s)
            Pv = lambda f, s=sv: Hv.solve_shifted(f, s)
        else:
            Pu = Pv = lambda f: f
        pgu, pgv = Pu(gu), Pv(gv)
        pn = [(Pu(n[0]) if np.any(n[0]) else 0 * u, Pv(n[1]) if np.any(n[1]) else 0 * v) for n in normals]
        Gp = np.array([[ip(n1[0], p2[0]) + ip(n1[1], p2[1]) for p2 in pn] for n1 in normals])
        rp = np.array([ip(n[0], pgu) + ip(n[1], pgv) for n in normals])
        alpha = _gram_solve(Gp, rp)
        du = pgu - sum(a_ * p[0] for a_, p in zip(alpha, pn))
        dv = pgv - sum(a_ * p[1] for a_, p in zip(alpha, pn))
        slope = ip(gu, du) + ip(gv, dv)
        if slope <= 0:
            du, dv = ru, rv
            slope = ip(gu, du) + ip(gv, dv)
        accepted = False
        rejections = 0
        for _ in range(60):
            cand = project_constraint(FieldPair(u - tau * du, v - tau * dv, grid), spec, kappa)
            if cap is not None and hdot_norm2(cand, params) > cap:
                rejections += 1
                tau *= config.backtrack
                if rejections >= 50:
                    cap_active = True
                    break
                continue
            dI = energy.increment(u, v, gu, gv, cand.u - u, cand.v - v)
            if dI <= -1e-4 * tau * slope and dI < 0:
                In, gun, gvn, partsn = energy(cand.u, cand.v)
                accepted = True
                break
            tau *= config.backtrack
        if cap_active:
            break
        if not accepted:
            stalls += 1
            tau = config.dt
            if stalls >= 3:
                break
            continue
        stalls = 0
        u, v = cand.u, cand.v
        I, gu, gv, parts = In, gun, gvn, partsn
        history.append(I)
        tau = min(tau * 2.0, 4.0 * config.dt)
    pair = FieldPair(u, v, grid)
    if config.recenter:
        for ax in _translation_free_axes(grid, params):
            pair = recenter_pair(pair, ax)
    lam1, lam2, lam1_printed = multipliers(pair, params)
    I = energy_I(pair, params)
    B = pohozaev_B(pair, params)
    ku, kv, pu, pv, K = energy(pair.u, pair.v)[3]
    scale = ku + kv + pu + pv
    cres = constraint_residual(pair, spec, kappa)
    converged = bool(converged and cres < max(config.constraint_tol, 1e-12) * 10 and not cap_active)
    if not converged:
        log.warning("ground-state solve stopped after %d iterations, residual %.3e", it, res)
    extra = {
        "lambda1_printed": lam1_printed,
        "pohozaev_normalised": abs(B) / scale if scale > 0 else 0.0,
        "constraint_residual": cres,
        "cap_active": cap_active,
        "system_residual": system_residual(pair, params, lam1, lam2),
        "l0": Hu.ground,
        "m0": Hv.ground,
        "boundary_ratio": grid.boundary_ratio(pair.u),
        "history": history,
    }
    if grid.boundary_ratio(pair.u) > 1e-8:
        log.warning("field touches the box edge (ratio %.2e); enlarge the box", grid.boundary_ratio(pair.u))
    return GroundStateResult(pair, I, lam1, lam2, B, float(res), it, converged, spec.kind, params, extra)


# --------------------------------------------------------------------------
# free solitons via the dilation-invariant quotient

SYSTEMS = {"systemq": 1.0, "systemq2": 2.0}


def _interp_dilate(f, grid: GridSpec, gamma: float):
    """Samples of x -> f(gamma * x) on the same grid."""
    ax = grid.axes[0]
    if ax.kind == "radial":
        r = ax.x
        xs = np.concatenate([-r[::-1], r, [ax.L + 0.5 * ax.h]])
        ys = np.concatenate([f[::-1], f, [0.0]])
        out = CubicSpline(xs, ys)(gamma * r)
        out[gamma * r > ax.L] = 0.0
        return out
    # trigonometric interpolation on a periodic axis
    m = ax.m
    c = np.fft.fft(f)
    k = ax.k.copy()
    t = gamma * ax.x - ax.x[0]
    ph = np.exp(1j * np.outer(t, k))
    if m % 2 == 0:
        ph[:, m // 2] = np.cos(t * k[m // 2])
    return (ph @ c).real / m


def _nehari_minimize(grid: GridSpec, kappa: float, sigma: float, scale: float, pot_axes,
                     u, v, config: SolverConfig, V=None):
    """Minimise S = (<u,A_u u> + <v,A_v v>)/2 - K/2 on its Nehari manifold.

    A_u = -Lap + 1 + scale*V,  A_v = -kappa*Lap + sigma + scale*V.  After every
    step the pair is rescaled by the unique factor that puts it back on the
    manifold; a step is kept only if S decreases.
    """
    Hu = SeparableOperator(grid, 1.0, scale, pot_axes)
    Hv = SeparableOperator(grid, kappa, scale, pot_axes)
    V = np.zeros(grid.shape) if V is None else V
    w = grid.weights

    def ip(a, b):
        return float(np.sum(w * a * b))

    def onto(u, v):
        lu, lv = laplacian_apply(u, grid), laplacian_apply(v, grid)
        h = (-ip(u, lu) + ip(u, u) + ip(V * u, u)
             - kappa * ip(v, lv) + sigma * ip(v, v) + ip(V * v, v))
        K = ip(u * u, v)
        if K <= 0:
            raise SolverError("Nehari rescale undefined (K <= 0)")
        s = 2.0 * h / (3.0 * K)
        return s * u, s * v, s * lu, s * lv, s * s * h, s ** 3 * K

    u, v, lu, lv, h, K = onto(u, v)
    J = 0.5 * h - 0.5 * K
    tau = config.dt
    res = np.inf
    it = 0
    converged = False
    stalls = 0
    for it in range(1, config.max_iter + 1):
        gu = -lu + u + V * u - u * v
        gv = -kappa * lv + sigma * v + V * v - 0.5 * u * u
        res = math.sqrt((ip(gu, gu) + ip(gv, gv)) / (ip(u, u) + ip(v, v)))
        if res < config.grad_tol:
            converged = True
            break
        du = Hu.solve_shifted(gu, -1.0)
        dv = Hv.solve_shifted(gv, -sigma)
        slope = ip(gu, du) + ip(gv, dv)
        ok = False
        for _ in range(50):
            un, vn, lun, lvn, hn, Kn = onto(u - tau * du, v - tau * dv)
            Jn = 0.5 * hn - 0.5 * Kn
            if Jn <= J - 1e-4 * tau * slope and Jn < J:
                ok = True
                break
            tau *= config.backtrack
        if not ok:
            # near the minimum J is dominated by roundoff; fall back to residual decrease
            tau = config.dt
            for _ in range(8):
                un, vn, lun, lvn, hn, Kn = onto(u - tau * du, v - tau * dv)
                gun = -lun + un + V * un - un * vn
                gvn = -kappa * lvn + sigma * vn + V * vn - 0.5 * un * un
                resn = math.sqrt((ip(gun, gun) + ip(gvn, gvn)) / (ip(un, un) + ip(vn, vn)))
                if resn < 0.9 * res:
                    break
                tau *= 0.5
            if resn < 0.9 * res:
                u, v, lu, lv, h, K, J = un, vn, lun, lvn, hn, Kn, 0.5 * hn - 0.5 * Kn
                tau = config.dt
                continue
            tau = config.dt
            stalls += 1
            if stalls >= 3:
                break
            continue
        stalls = 0
        u, v, lu, lv, h, K, J = un, vn, lun, lvn, hn, Kn, Jn
        tau = min(2.0 * tau, 4.0 * config.dt)
    return u, v, float(res), it, converged, J


def _gn_stage(grid, n, kappa, sigma, u, v, config, max_iter):
    """Preconditioned descent on log of the dilation-invariant quotient (mass held fixed)."""
    w = grid.weights
    lap = SeparableOperator(grid, 1.0, 0.0, ())

    def ip(a, b):
        return float(np.sum(w * a * b))

    def state(u, v):
        lu, lv = laplacian_apply(u, grid), laplacian_apply(v, grid)
        kin = -ip(u, lu) - kappa * ip(v, lv)
        M = ip(u, u) + sigma * ip(v, v)
        K = ip(u * u, v)
        return lu, lv, kin, M, K

    def logR(kin, M, K):
        return n / 4.0 * math.log(kin) + (6.0 - n) / 4.0 * math.log(M) - math.log(K)

    lu, lv, kin, M, K = state(u, v)
    if K <= 0:
        raise SolverError("interaction vanished; rescale singular")
    M0 = M
    val = logR(kin, M, K)
    tau = 1.0
    stalls = 0
    it = 0
    res = np.inf
    for it in range(1, max_iter + 1):
        a = n * K / (4.0 * kin)
        b = (6.0 - n) * K / (4.0 * M)
        ru = -a * lu + b * u - u * v
        rv = -a * kappa * lv + b * sigma * v - 0.5 * u * u
        res = math.sqrt((ip(ru, ru) + ip(rv, rv)) / (ip(u, u) + ip(v, v))) / b
        if res < config.grad_tol:
            break
        du = lap.solve_shifted(ru, -b / a) / a
        dv = lap.solve_shifted(rv, -b * sigma / (a * kappa)) / (a * kappa)
        slope = 2.0 / K * (ip(ru, du) + ip(rv, dv))
        ok = False
        for _ in range(50):
            un, vn = u - tau * du, v - tau * dv
            lun, lvn, kn, Mn, Kn = state(un, vn)
            if Kn > 0 and kn > 0:
                new = logR(kn, Mn, Kn)
                if new <= val - 1e-4 * tau * slope and new < val:
                    ok = True
                    break
            tau *= config.backtrack
        if not ok:
            stalls += 1
            tau = 1.0
            if stalls >= 3:
                break
            continue
        stalls = 0
        s = math.sqrt(M0 / Mn)
        u, v = s * un, s * vn
        lu, lv = s * lun, s * lvn
        kin, M, K = s * s * kn, M0, s ** 3 * Kn
        val = new
        tau = min(2.0 * tau, 4.0)
    a = n * K / (4.0 * kin)
    b = (6.0 - n) * K / (4.0 * M)
    return u, v, a, b, res, it


def solve_free_soliton(params: ModelParams, system: str, grid: GridSpec,
                       config: SolverConfig | None = None, max_rounds: int = 12) -> GroundStateResult:
    """Positive solution of -Lap Q1 + Q1 = Q1 Q2, -kappa Lap Q2 + s Q2 = Q1^2/2 (s=1: systemq, s=2: systemq2).

    Stage one minimises the dilation-invariant quotient and maps the minimiser
    to unit coefficients by an amplitude/length rescale.  On spectral grids the
    rescale is iterated to a fixed point; on finite-difference radial grids the
    quotient is only approximately dilation invariant, so a Nehari-normalised
    descent on the action finishes the job.
    """
    config = config or SolverConfig(grad_tol=1e-10, max_iter=4000)
    if params.potential != "none":
        raise ModelError("free solitons need potential = none")
    if system not in SYSTEMS:
        raise ModelError(f"unknown system {system!r}")
    if params.n >= 2 and grid.geometry != "radial":
        raise ModelError("free solitons for n >= 2 use a radial grid")
    if grid.ndim != 1:
        raise ModelError("free solitons are computed on one-axis grids")
    check_dim(grid, params)
    sigma = SYSTEMS[system]
    n, kappa = params.n, params.kappa

    if config.init_pair is not None:
        u, v = np.abs(config.init_pair.u).astype(float), np.abs(config.init_pair.v).astype(float)
    else:
        x2 = grid.r2
        u = 3.0 * np.exp(-x2 / (2.0 * config.init_width ** 2))
        v = 1.5 * np.exp(-x2 / (2.0 * config.init_width ** 2))
    spectral = grid.geometry == "cartesian"
    total_it = 0
    gamma = np.nan
    res = np.inf
    rounds = max_rounds if spectral else 2
    budget = config.max_iter if spectral else min(config.max_iter, 400)
    for _ in range(rounds):
        u, v, a, b, res, it = _gn_stage(grid, n, kappa, sigma, u, v, config, budget)
        total_it += it
        gamma = math.sqrt(a / b)
        u, v = u / b, v / b
        if abs(gamma - 1.0) < 1e-11:
            break
        u = _interp_dilate(u, grid, gamma)
        v = _interp_dilate(v, grid, gamma)
    u, v, nres, it, nconv, _ = _nehari_minimize(grid, kappa, sigma, 0.0, (), u, v, config)
    total_it += it
    pair = FieldPair(u, v, grid)
    if spectral and config.recenter:
        pair = recenter_pair(pair, 0)
    pde = free_soliton_residual(pair, params, system)
    K = interaction_K(pair)
    kinQ = dirichlet(pair.u, grid) + kappa * dirichlet(pair.v, grid)
    MQ = norm2(pair.u, grid) + sigma * norm2(pair.v, grid)
    converged = bool(pde < 1e-6 and nres < max(config.grad_tol, 1e-9) * 100)
    extra = {
        "system": system,
        "pde_residual": pde,
        "gamma_last": gamma,
        "gn_residual": res,
        "glem_kinetic": kinQ / (n / 4.0 * K) - 1.0,
        "glem_mass": MQ / ((6.0 - n) / 4.0 * K) - 1.0,
        "K": K,
        "Q": norm2(pair.u, grid) + 2.0 * norm2(pair.v, grid),
    }
    I = energy_I(pair, params)
    return GroundStateResult(pair, I, -1.0, -sigma, pohozaev_B(pair, params), float(nres), total_it,
                             converged, "free", params, extra)


def free_soliton_residual(pair: FieldPair, params: ModelParams, system: str) -> float:
    """L2 norm of the residuals of both equations."""
    sigma = SYSTEMS[system]
    g = pair.grid
    r1 = -laplacian_apply(pair.u, g) + pair.u - pair.u * pair.v
    r2 = -params.kappa * laplacian_apply(pair.v, g) + sigma * pair.v - 0.5 * pair.u ** 2
    return math.sqrt(norm2(r1, g) + norm2(r2, g))


# --------------------------------------------------------------------------
# scaled system and the curve t -> (w1^t, w2^t)

def scaled_curve_point(params: ModelParams, t: float, grid: GridSpec,
                       config: SolverConfig | None = None) -> GroundStateResult:
    """Ground state of -Lap w_j + w_j + t^{-2} V w_j = (w1 w2, w1^2/2) on the Nehari manifold.

    ``params.potential`` selects V; the scale t^{-2} is applied here.  Pass
    t = inf for the potential-free limit.
    """
    config = config or SolverConfig(grad_tol=1e-9, max_iter=3000)
    if not t > 0:
        raise ValueError("t must be positive")
    check_dim(grid, params)
    scale = 0.0 if (math.isinf(t) or params.potential == "none") else t ** -2.0
    pot_axes = potential_axes(grid, params) if scale > 0 else ()
    if scale > 0:
        V = potential_array(grid, ModelParams(params.n, 1.0, params.potential, scale))
    else:
        V = np.zeros(grid.shape)
    if config.init_pair is not None:
        u, v = np.abs(config.init_pair.u).astype(float), np.abs(config.init_pair.v).astype(float)
    else:
        u, v = _gaussian_init(grid, ModelParams(params.n, 1.0, "none"), config.init_width, 1.0)
        if config.noise > 0:
            rng = np.random.default_rng(config.seed)
            u = u * (1.0 + config.noise * rng.random(grid.shape))
            v = v * (1.0 + config.noise * rng.random(grid.shape))
        u, v = 3.0 * u, 1.5 * v
    if grid.geometry != "radial":
        p = steiner_rearrange_axial(FieldPair(u, v, grid))
        u, v = p.u, p.v
    u, v, res, it, converged, J = _nehari_minimize(grid, 1.0, 1.0, scale, pot_axes, u, v, config, V)
    pair = FieldPair(u, v, grid)
    if config.recenter and grid.geometry != "radial":
        pair = recenter_pair(pair, grid.free_axis)
    K = interaction_K(pair)
    if params.potential == "none":
        VW = 0.0
    else:
        V1 = potential_array(grid, ModelParams(params.n, 1.0, params.potential, 1.0))
        VW = float(integrate(V1 * (pair.u ** 2 + pair.v ** 2), grid).real)
    extra = {"t": t, "K": K, "V_unscaled": VW, "J": J, "scale": scale,
             "mass": norm2(pair.u, grid) + norm2(pair.v, grid)}
    return GroundStateResult(pair, J, 1.0, 1.0, float("nan"), float(res), it, converged, "nehari", params, extra)


def curve_N_of_t(result: GroundStateResult, t: float, printed: bool = False, zero_potential: bool = False) -> float:
    """Mass level N_t attached to the curve point at parameter t.

    N_t^2 = t^{(4-n)/2} (c_n K - 2 t^{-2} int V (w1^2 + w2^2)), with c_n = (6-n)/4
    from combining the Nehari and Pohozaev identities of the scaled system.
    ``printed=True`` uses c_n = (n+6)/4 instead.
    """
    n = result.params.n
    K = result.extra["K"]
    VW = 0.0 if zero_potential or math.isinf(t) else result.extra["V_unscaled"] * t ** -2.0
    c = (n + 6.0) / 4.0 if printed else (6.0 - n) / 4.0
    val = c * K - 2.0 * VW
    if math.isinf(t):
        raise ValueError("N_t needs finite t")
    val = t ** ((4.0 - n) / 2.0) * val
    if val <= 0:
        raise SolverError("N_t^2 is not positive")
    return math.sqrt(val)


def fibering_profile(pair: FieldPair, params: ModelParams, taus):
    """Rows (tau, T(tau), T'(tau)) along the mass-preserving dilation orbit."""
    g = pair.grid
    kin = dirichlet(pair.u, g) + params.kappa * dirichlet(pair.v, g)
    V = potential_array(g, params)
    P = float(integrate(V * (np.abs(pair.u) ** 2 + np.abs(pair.v) ** 2), g).real)
    K = interaction_K(pair) if params.interaction else 0.0
    n = params.n
    taus = np.asarray(taus, dtype=float)
    if np.any(taus <= 0):
        raise ValueError("tau samples must be positive")
    T = 0.5 * taus ** 2 * kin + 0.5 * P / taus ** 2 - 0.5 * taus ** (n / 2.0) * K
    dT = taus * kin - P / taus ** 3 - n / 4.0 * taus ** (n / 2.0 - 1.0) * K
    return np.column_stack([taus, T, dT])


def resonant_product_state(params: ModelParams, mu1: float, grid: GridSpec, bracket=(4.0, 16.0),
                           config: SolverConfig | None = None, xtol: float = 1e-10) -> GroundStateResult:
    """Product-constrained ground state with mu2 tuned so that lambda2 = 2 lambda1.

    Only then is (e^{-i lambda1 t} u, e^{-2 i lambda1 t} v) an exact solution of the
    evolution; a product minimiser at arbitrary masses is not a standing wave.
    """
    config = config or SolverConfig()

    def gap(mu2):
        r = solve_groundstate(params, ConstraintSpec.product(mu1, mu2), grid, config)
        return r.lambda2 - 2.0 * r.lambda1

    lo, hi = bracket
    glo, ghi = gap(lo), gap(hi)
    if glo * ghi > 0:
        raise SolverError(f"lambda2 - 2 lambda1 does not change sign on [{lo}, {hi}] ({glo:.3g}, {ghi:.3g})")
    mu2 = brentq(gap, lo, hi, xtol=xtol)
    res = solve_groundstate(params, ConstraintSpec.product(mu1, mu2), grid, config)
    res.extra["resonance_gap"] = res.lambda2 - 2.0 * res.lambda1
    res.extra["mu2_resonant"] = mu2
    return res
