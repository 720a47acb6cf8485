"""
Decreasing rearrangements and Hardy's inequality
================================================

On a finite space |f| takes finitely many values, so f* is a step function on
[0, mu(M)) and f** = (1/t) int_0^t f* is available in closed form.
"""
import numpy as np

import kfl
from kfl import rearrange

rng = np.random.default_rng(0)
mu = rng.uniform(0.1, 1.0, 8)
f = rng.normal(size=8)
fs = kfl.decreasing_rearrangement(mu, f)
print("plateau breaks:", np.round(fs.breaks, 3))
print("plateau values:", np.round(fs.values, 3))
print(f"int f* = {fs.integral():.12f}, ||f||_1 = {np.dot(np.abs(f), mu):.12f}")

ts = np.geomspace(0.05, mu.sum(), 6)
print("t     f*(t)   f**(t)")
for t, a, b in zip(ts, fs(ts), kfl.double_star(fs, ts)):
    print(f"{t:.3f}  {a:.4f}  {b:.4f}")

# subadditivity of f -> f**
g = rng.normal(size=8)
lhs = kfl.double_star(kfl.decreasing_rearrangement(mu, f + g), ts)
rhs = kfl.double_star(fs, ts) + kfl.double_star(kfl.decreasing_rearrangement(mu, g), ts)
print(f"(f+g)** <= f** + g** at all t: {np.all(lhs <= rhs + 1e-12)}")

# Hardy's inequality, both sides integrated exactly
for l in (0.25, 0.5, 1.0):
    rep = kfl.hardy_check(fs, l)
    print(f"l = {l}: lhs {rep.constants['lhs']:.6f} <= rhs {rep.constants['rhs']:.6f}")

# Holmstedt's formula for K(f, t; L_1, L_2) against the exact K on a 4-point space
sp = kfl.line(4)
h = rng.normal(size=4)
hs = kfl.decreasing_rearrangement(sp, h)
pair = kfl.SpacePair.lebesgue(1, 2)
for t in (0.1, 1.0, 10.0):
    k = kfl.k_exact(sp, None, h, pair, t)
    print(f"t = {t:5}: exact K {k:.5f}, Holmstedt {rearrange.holmstedt_k(hs, 1, 2, t):.5f}")
