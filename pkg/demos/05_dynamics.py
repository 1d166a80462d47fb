"""Time evolution: conservation for generic data, then a blow-up run in n = 4.

Run:  python3 demos/05_dynamics.py      (about half a minute)
"""
# %%
import numpy as np

from nlsq import EvolveConfig, FieldPair, ModelParams, cartesian, evolve, radial, solve_free_soliton
from nlsq.dynamics import blowup_data, blowup_lambda_min, is_concave

# %% generic Gaussian data under V2
g = cartesian(("x1", 8, 32), ("x2", 64, 256))
X, Y = g.mesh(0), g.mesh(1)
pair = FieldPair(0.8 * np.exp(-(X ** 2 + Y ** 2) / 2) * np.exp(0.2j * Y),
                 0.5 * np.exp(-(X ** 2 + (Y - 1) ** 2) / 2) + 0j, g)
ts = evolve(pair, ModelParams(2, 1.0, "V2"), EvolveConfig(dt=1e-3, T=1.0, stride=100))
print(ts.summary())

# %% scaled soliton with negative energy: the virial moment is concave and the gradient explodes
sol = solve_free_soliton(ModelParams(4, 0.5), "systemq2", radial(10, 1024, 4))
lam = 1.3 * blowup_lambda_min(sol, 1.1)
ts = evolve(blowup_data(sol, 1.1, lam), ModelParams(4, 0.5, "V1"), EvolveConfig(dt=1e-3, T=1.0, gmax_factor=10))
print(ts.verdict, "t* =", ts.t_star, "concave:", is_concave(ts))
print(ts.to_csv().splitlines()[0])
