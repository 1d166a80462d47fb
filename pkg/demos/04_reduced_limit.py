"""Small-mass limit: compare a full V2 minimiser with the 1D reduced system.

Run:  python3 demos/04_reduced_limit.py
"""
# %%
from nlsq import (ConstraintSpec, ModelParams, Reduced1DProblem, cartesian, compare_full_vs_reduced,
                  solve_groundstate, solve_reduced, transverse_spectrum)
from nlsq.oscillator import transverse_grid
from nlsq.reduced import reduced_coefficients

mu = 0.01
grid = cartesian(("x1", 8, 32), ("x2", 256, 512))
full = solve_groundstate(ModelParams(2, 1.0, "V2"), ConstraintSpec.product(mu, mu), grid)

tg = transverse_grid(grid)
bu, bv = transverse_spectrum(1.0, 1, tg), transverse_spectrum(1.0, 1, tg)
c1, c2 = reduced_coefficients("overlap", 1.0, 2, bu, bv)
red = solve_reduced(Reduced1DProblem(c1, c2, 1.0, mu, mu, cartesian(("x2", 256, 512))))
print(f"c1=c2={c1:.8f}  lambda_inf=({red.lambda1:.6e}, {red.lambda2:.6e})")

# %% remainders divided by mu1 + mu2
rep = compare_full_vs_reduced(full, bu, bv, red)
print(rep.to_json())
