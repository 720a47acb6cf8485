"""
The K-functional between Schrodinger-Sobolev spaces
===================================================

K(u, t) = inf over u = a0 + a1 of ||a0||_{W_r} + t ||a1||_{W_q}. On spaces
with at most four points it is computed to high accuracy. Everywhere it is
bracketed by a rearrangement formula from below and by the objective of the
Calderon-Zygmund split at level alpha(t) from above.
"""
import numpy as np

import kfl
from kfl import kfunc

rng = np.random.default_rng(7)
sp = kfl.line(4)
V = rng.uniform(0.5, 2.0, 4)
u = rng.normal(size=4)
ts = kfunc.log_grid(1e-2, 1e2, 9)
curves = kfl.k_curves(sp, V, u, r=1, s=1, q=2, ts=ts)

print("      t      lower     exact   cz-upper")
for i, t in enumerate(ts):
    print(f"{t:8.3g} {curves['lower'].K[i]:9.4f} {curves['exact'].K[i]:9.4f} {curves['cz-upper'].K[i]:9.4f}")
# the formulas hold up to constants, so "lower" may exceed K by a bounded factor
print("exact curve:", curves["exact"].check())

# the trivial splits bound K from above
us = kfl.sobolev_function(sp, u)
print(f"||u||_W1 = {kfl.sobolev_norm(sp, V, us, 1):.4f}, ||u||_W2 = {kfl.sobolev_norm(sp, V, us, 2):.4f}")

# q = inf: for r = s the two formulas coincide, a genuine characterisation of K
g = kfl.build_grid(1, [-1, 1], 0.05)
Vg = kfl.make_weight("polynomial", g, coeffs=[1, 0, 1])
w = kfl.sobolev_function(g, np.cos(3 * g.coords[:, 0]))
for t in (0.01, 0.1, 1.0):
    lo, up = kfl.k_bounds_infty(g, Vg, w, 1, 1, t)
    print(f"q = inf, t = {t}: lower {lo:.6f}, upper {up:.6f}")
