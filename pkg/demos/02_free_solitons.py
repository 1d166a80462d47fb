"""Free solitons: the explicit sech^2 profile in 1D and radial profiles for n = 2..4.

Run:  python3 demos/02_free_solitons.py
"""
# %%
import numpy as np

from nlsq import ModelParams, cartesian, radial, solve_free_soliton, gn_quotient

# %% n = 1, kappa = 2: Q1 = 3 sech^2(x/2), Q2 = Q1/2
g = cartesian(("x", 32, 1024))
x = g.axes[0].x
res = solve_free_soliton(ModelParams(1, 2.0), "systemq2", g)
exact = 3 / np.cosh(x / 2) ** 2
print("1D: max |Q1 - 3 sech^2(x/2)| =", np.max(np.abs(res.pair.u.real - exact)))
print("    PDE residual", res.extra["pde_residual"], " GN quotient", gn_quotient(res.pair, res.params))

# %% radial profiles; the two scaling identities hold to O(h^2)
for n in (2, 3, 4):
    kappa = 0.5 if n == 4 else 1.0
    res = solve_free_soliton(ModelParams(n, kappa), "systemq2", radial(20, 1600, n))
    print(f"n={n}: Q1(0)={res.pair.u.real[0]:.6f} mass={res.extra['Q']:.4f} "
          f"identity errors {res.extra['glem_kinetic']:.1e} {res.extra['glem_mass']:.1e} converged={res.converged}")
