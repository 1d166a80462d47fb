"""Normalized ground states under partial confinement V2 = |x'|^2 (free axis x_n).

Prints the functional report of one state and a short mass scan showing the
multiplier sum approaching 2 l0 from below as the masses shrink.

Run:  python3 demos/03_partial_confinement.py
"""
# %%
from nlsq import ConstraintSpec, ModelParams, cartesian, report, solve_groundstate

params = ModelParams(2, 1.0, "V2")
grid = cartesian(("x1", 8, 32), ("x2", 64, 256))
res = solve_groundstate(params, ConstraintSpec.product(2.0, 2.0), grid)
print(res.sidecar_json())
print(report(res.pair, params).to_json())

# %% mass scan; the axial extent grows like mu^{-1/3}, so the box grows too
for mu, L, m in ((0.1, 128, 512), (0.01, 256, 512)):
    g = cartesian(("x1", 8, 32), ("x2", L, m))
    r = solve_groundstate(params, ConstraintSpec.product(mu, mu), g)
    print(f"mu={mu}: I={r.I:.8f} lambda1+lambda2={r.lambda1 + r.lambda2:.6f} converged={r.converged}")
