"""Mountain-pass curve in n = 5: lambda * N_t^4 stays put along t -> (w1^t, w2^t).

Run:  python3 demos/06_mountain_pass_curve.py
"""
# %%
from nlsq import ModelParams, curve_N_of_t, radial, scaled_curve_point

grid = radial(30, 3000, 5)
params = ModelParams(5, 1.0, "V1")
for t in (1e2, 1e3, 1e4):
    res = scaled_curve_point(params, t, grid)
    N = curve_N_of_t(res, t)
    print(f"t={t:8.0f}  N_t={N:.6f}  lambda*N^4={t * N ** 4:.6e}  converged={res.converged}")
