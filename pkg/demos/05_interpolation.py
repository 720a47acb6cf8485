"""
Interpolation norms
===================

The real-method norm (int_0^inf (t^-theta K(u, t))^p dt/t)^(1/p) with
1/p = (1 - theta)/r + theta/q should be comparable to ||u||_{W_p}. Here the
ratio is measured on random fields over a 100-point grid.
"""
import numpy as np

import kfl
from kfl import kfunc, verify

g = kfl.build_grid(1, [-1, 1], 2 / 99)
V = kfl.make_weight("polynomial", g, coeffs=[1, 0, 1])
rng = np.random.default_rng(11)
r, s, q, p = 1, 1, 2, 1.5
print(f"theta(r={r}, q={q}, p={p}) = {kfunc.theta(r, q, p):.4f}")

ratios = []
for _ in range(6):
    u = kfl.sobolev_function(g, verify.smooth_field(g, rng))
    ratios.append(kfl.interp_norm(g, V, u, r, q, p) / kfl.sobolev_norm(g, V, u, p))
print("interp_norm / ||u||_W_p:", np.round(ratios, 4))

u = verify.smooth_field(g, rng)
rep = kfl.equivalence_report(g, V, [u, 2 * u, 10 * u], r, s, q, p)
print("scaled copies:", rep.line())
