"""
Spaces, balls and reverse-Holder weights
========================================

A finite metric measure space is a distance matrix plus point masses.
Everything else (balls, doubling, maximal function, weight classes) is
computed from those two arrays.
"""
import numpy as np

import kfl
from kfl import weights as W

# an 8-point line: balls are runs of consecutive points
sp = kfl.build_grid(1, [0, 7], 1.0)
C, rep = kfl.doubling_constant(sp)
print(f"8-point line: doubling constant {C:g} attained at center {rep.center}")
print(f"distinct balls: {len(kfl.enumerate_balls(sp))}, "
      f"with radius cap 1.1: {len(kfl.enumerate_balls(sp, 1.1))}")

# the Cayley graph of Z^2 with the word metric
cay = kfl.build_cayley_z2(3)
print(f"Z^2 ball of radius 3: {cay.n} points, doubling {kfl.doubling_constant(cay)[0]:.3g}")

# the Hardy-Littlewood maximal function dominates the field
g = kfl.build_grid(1, [-1, 1], 1 / 32)
f = np.exp(-40 * g.coords[:, 0] ** 2)
Mf = kfl.maximal(g, f)
print(f"max(f) = {f.max():.3f}, max(Mf) = {Mf.max():.3f}, f <= Mf everywhere: {np.all(f <= Mf)}")

# |x|^-alpha is in RH_2 iff alpha < 1/2; a refinement study tells the two apart
base = kfl.build_grid(1, [-1, 1], 1 / 8)
for alpha in (0.25, 0.6):
    rep = kfl.rh_exponent_scan(base, kfl.make_weight("power", base, alpha=alpha), [2.0])
    consts = rep.constants["constants"][2.0]
    verdict = "in class" if rep.constants["in_class"][2.0] else "diverging"
    print(f"|x|^-{alpha}: RH_2 over refinements {np.round(consts, 3)} -> {verdict}")

# Muckenhoupt constants of a polynomial potential
V = kfl.make_weight("polynomial", g, coeffs=[1, 0, 1])
print(f"V = 1 + x^2: RH_inf {kfl.rh_infinity_constant(g, V)[0]:.4f}, "
      f"A_2 {kfl.ap_constant(g, V, 2):.4f}, best A_p over (2, 4, 8): {W.best_ap(g, V)}")
