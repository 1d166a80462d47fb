"""Transverse oscillator spectra and the two overlap constants.

Run:  python3 demos/01_transverse_spectra.py
"""
# %%
import math

from nlsq import cartesian, transverse_spectrum, overlap_constants, printed_overlap_constants

# %% ground energies of -c Lap + |x|^2 in d dimensions: l0 = d, m0 = sqrt(c) d
for d in (1, 2, 3):
    g = cartesian(*[(f"x{i}", 8, 32) for i in range(d)])
    b = transverse_spectrum(1.0, d, g, 4)
    print(f"d={d}: lowest levels", " ".join(f"{e:.6f}" for e in b.evals))

g = cartesian(("x1", 12, 64), ("x2", 12, 64))
l0 = transverse_spectrum(1.0, 2, g).e0
for kappa in (0.25, 1.0, 4.0):
    print(f"kappa={kappa}: m0/l0 = {transverse_spectrum(kappa, 2, g).e0 / l0:.10f}  sqrt(kappa) = {math.sqrt(kappa):.10f}")

# %% overlap constants int Psi0^2 Phi0 and int Phi0^3 for the 1D transverse problem (n = 2)
g1 = cartesian(("x1", 10, 64))
for kappa in (1.0, 2.0):
    s1, s2 = overlap_constants(transverse_spectrum(1.0, 1, g1), transverse_spectrum(kappa, 1, g1))
    p1, p2 = printed_overlap_constants(kappa, 2)
    print(f"kappa={kappa}: s1={s1:.10f} s2={s2:.10f}   printed closed forms {p1:.6f} {p2:.6f}")
