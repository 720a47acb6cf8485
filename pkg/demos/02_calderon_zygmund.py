"""
A Calderon-Zygmund decomposition for Sobolev functions
======================================================

Above the level alpha the maximal function of T_s u = |u|^s + |grad u|^s +
|V u|^s picks out an open set Omega. A Whitney cover of Omega and a smooth
partition of unity split u into a good part g, bounded by alpha, and bad
pieces b_i supported in the Whitney balls.
"""
import numpy as np

import kfl
from kfl import calculus

g = kfl.build_grid(2, [-1, 1], 0.1)
x, y = g.coords.T
# a steep potential, so balls far from the origin are of type 1
V = kfl.make_weight("polynomial", g, coeffs=[1, 0, 40])
u = kfl.sobolev_function(g, np.exp(-8 * ((x - 0.3) ** 2 + y**2)) + 0.5 * np.sin(3 * x * y))

MT = calculus.maximal(g, calculus.t_r(g, V, u, 1))
print(f"{g.n} points; M T_1 u ranges over [{MT.min():.3g}, {MT.max():.3g}]")

for alpha in np.geomspace(MT.min(), MT.max(), 5)[1:-1]:
    d = kfl.cz_decompose(g, V, u, r=1, s=1, p=1.5, q=2, alpha=alpha)
    rep = kfl.verify_cz(g, V, d, 1.5, f=u)
    recon = d.g.values + sum((pc.b.values for pc in d.pieces), np.zeros(g.n))
    types = np.bincount([pc.type for pc in d.pieces], minlength=3)[1:]
    print(f"\nalpha = {alpha:.4g}: |Omega| = {int(d.omega.sum())} points, {len(d.pieces)} Whitney balls "
          f"(type 1: {types[0]}, type 2: {types[1]})")
    print(f"  max |u - g - sum b_i| = {np.abs(recon - u.values).max():.2e}")
    print("  " + rep.line())

# above the maximum nothing is bad
d = kfl.cz_decompose(g, V, u, 1, 1, 1.5, 2, alpha=2 * MT.max())
print(f"\nalpha above max: {d.diagnostic}")
