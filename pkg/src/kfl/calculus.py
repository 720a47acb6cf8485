"""Discrete calculus on finite spaces.

Gradient magnitudes, weighted Sobolev norms, the pointwise functionals
``T_r f = |f|^r + |grad f|^r + |V f|^r``, the uncentered maximal operator and
bank-based estimates of Poincare and Fefferman-Phong constants.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .report import VerificationReport
from .space import FiniteMetricMeasureSpace, Ball, SpaceError


class IsolatedPointWarning(UserWarning):
    """A point without neighbours was given gradient 0."""


@dataclass(frozen=True)
class SobolevFunction:
    values: np.ndarray
    gradient: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        g = np.asarray(self.gradient, dtype=float).ravel()
        if v.shape != g.shape:
            raise ValueError("values and gradient lengths differ")
        if np.any(g < 0):
            raise ValueError("gradient magnitudes must be nonnegative")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "gradient", g)

    def __mul__(self, lam):
        lam = float(lam)
        return SobolevFunction(lam * self.values, abs(lam) * self.gradient)

    __rmul__ = __mul__


def _vals(x) -> np.ndarray:
    """Values of a Weight, SobolevFunction or plain array."""
    return np.asarray(getattr(x, "values", x), dtype=float)


def gradient_batch(space: FiniteMetricMeasureSpace, values) -> np.ndarray:
    """Gradient magnitudes for a batch of fields, shape ``(m, n)``."""
    F = np.atleast_2d(np.asarray(values, dtype=float))
    m, n = F.shape
    if n != space.n:
        raise SpaceError("field length does not match space")
    if space.gradient_mode == "grid":
        g = space.grid
        A = F.reshape((m,) + g.shape)
        sq = np.zeros_like(A)
        for ax, k in enumerate(g.shape):
            if k < 2:
                continue
            sq += np.gradient(A, g.spacing, axis=ax + 1) ** 2
        return np.sqrt(sq).reshape(m, n)
    src, dst, dist = space.edges
    out = np.zeros((m, n))
    if src.size == 0:
        warnings.warn("space has isolated points; gradient set to 0", IsolatedPointWarning)
        return out
    slope = np.abs(F[:, src] - F[:, dst]) / dist
    starts = np.flatnonzero(np.r_[True, src[1:] != src[:-1]])
    out[:, src[starts]] = np.maximum.reduceat(slope, starts, axis=1)
    if np.unique(src).size < n:
        warnings.warn("space has isolated points; gradient set to 0", IsolatedPointWarning)
    return out


def gradient(space: FiniteMetricMeasureSpace, values) -> np.ndarray:
    """Gradient magnitude |grad f| of a field.

    Grid spaces use per-axis central differences (one-sided at the boundary);
    other spaces use the upper gradient ``max_{y ~ x} |f(x) - f(y)| / d(x, y)``.
    """
    return gradient_batch(space, _vals(values).reshape(1, -1))[0]


def sobolev_function(space: FiniteMetricMeasureSpace, values) -> SobolevFunction:
    v = _vals(values)
    return SobolevFunction(v, gradient(space, v))


def lp_norm(space: FiniteMetricMeasureSpace, values, p: float) -> float:
    """``(sum |v_i|^p mu_i)^(1/p)``; ``p = inf`` is the max norm."""
    a = np.abs(_vals(values))
    if np.isinf(p):
        return float(a.max()) if a.size else 0.0
    if p < 1:
        raise ValueError("p must be >= 1")
    return float(np.dot(a**p, space.measure) ** (1.0 / p))


def sobolev_norm(space, V, u: SobolevFunction, p: float, homogeneous: bool = False) -> float:
    """``||f||_p + || |grad f| ||_p + ||V f||_p`` (first term dropped when homogeneous)."""
    f = u.values
    total = lp_norm(space, u.gradient, p) + lp_norm(space, _vals(V) * f, p)
    if not homogeneous:
        total += lp_norm(space, f, p)
    return total


def t_r(space, V, u: SobolevFunction, r: float, homogeneous: bool = False) -> np.ndarray:
    if r < 1:
        raise ValueError("r must be >= 1")
    out = u.gradient**r + np.abs(_vals(V) * u.values) ** r
    if not homogeneous:
        out = out + np.abs(u.values) ** r
    return out


def maximal(space: FiniteMetricMeasureSpace, field, radius_cap: Optional[float] = None) -> np.ndarray:
    """Uncentered maximal function ``Mf(x) = max_{B containing x} avg_B |f|``."""
    bt = space.balls
    avg = bt.averages(np.abs(_vals(field)))
    if radius_cap is not None:
        avg = np.where(bt.diameter < radius_cap, avg, -np.inf)
    # a point at position j from c lies in every ball from its level onwards
    suffix = np.maximum.accumulate(avg[:, ::-1], axis=1)[:, ::-1]
    return np.take_along_axis(suffix, bt.rank, axis=1).max(axis=0)


def poincare_ratio(space, s: float, u: SobolevFunction, ball: Ball) -> float:
    """``avg_B |f - f_B|^s / (r^s avg_B |grad f|^s)`` on one ball."""
    m = np.asarray(ball.members)
    mu = space.measure[m]
    f = u.values[m]
    fb = np.dot(f, mu) / mu.sum()
    left = np.dot(np.abs(f - fb) ** s, mu) / mu.sum()
    right = ball.radius**s * np.dot(u.gradient[m] ** s, mu) / mu.sum()
    return float(left / right)


def poincare_constant(space: FiniteMetricMeasureSpace, s: float, bank: Sequence[SobolevFunction],
                      radius_cap: Optional[float] = None):
    """Largest Poincare ratio over admissible balls and bank members.

    Balls where both sides vanish are skipped; a positive left side over a
    zero right side is a violation and makes the constant infinite.

    Returns ``(C, VerificationReport)``.
    """
    if not bank:
        raise ValueError("bank must be nonempty")
    bt = space.balls
    mask = bt.admissible(radius_cap)
    mu = space.measure
    best, where = 0.0, None
    skipped = violations = tested = 0
    for c in range(space.n):
        ends = np.flatnonzero(mask[c])
        if ends.size == 0:
            continue
        o = bt.order[c]
        mu_o = mu[o]
        inside = np.arange(space.n)[None, :] <= ends[:, None]  # (levels, n)
        w = inside * mu_o[None, :]
        mass = w.sum(axis=1)
        r = bt.radius[c, ends]
        for b_idx, u in enumerate(bank):
            f = u.values[o]
            scale = max(np.abs(u.values).max(), 1e-300)
            fb = (w @ f) / mass
            left = (w * np.abs(f[None, :] - fb[:, None]) ** s).sum(axis=1) / mass
            right = r**s * (w @ (u.gradient[o] ** s)) / mass
            zero_l = left <= (1e-12 * scale) ** s
            zero_r = right <= 0
            skipped += int(np.sum(zero_l & zero_r))
            bad = ~zero_l & zero_r
            if np.any(bad):
                violations += int(bad.sum())
                best, where = np.inf, (c, float(r[np.argmax(bad)]), b_idx)
                continue
            ok = ~zero_r
            tested += int(ok.sum())
            if np.any(ok):
                ratio = np.where(ok, left / np.where(ok, right, 1.0), -np.inf)
                k = int(np.argmax(ratio))
                if ratio[k] > best:
                    best, where = float(ratio[k]), (c, float(r[k]), b_idx)
    rep = VerificationReport(
        "poincare",
        {"C": best, "balls_tested": tested, "skipped": skipped, "violations": violations},
        {"s": s, "radius_cap": radius_cap, "bank_size": len(bank)},
        passed=violations == 0,
        notes=("vacuous: every ball skipped" if tested == 0 and violations == 0
               else "Poincare violated" if violations else
               f"attained at center={where[0]} radius={where[1]:.6g} bank#{where[2]}"),
    )
    return best, rep


def fp_ratio(space, w, p: float, u: SobolevFunction, ball: Ball) -> float:
    """``int_B(|grad u|^p + w|u|^p) / (min(R^-p, w_B) int_B |u|^p)`` on one ball."""
    m = np.asarray(ball.members)
    mu = space.measure[m]
    wv = _vals(w)[m]
    up = np.abs(u.values[m]) ** p
    num = np.dot(u.gradient[m] ** p + wv * up, mu)
    wb = np.dot(wv, mu) / mu.sum()
    return float(num / (min(ball.radius ** -p, wb) * np.dot(up, mu)))


def fp_constant(space: FiniteMetricMeasureSpace, w, p: float, bank: Sequence[SobolevFunction],
                radius_cap: Optional[float] = None):
    """Smallest Fefferman-Phong ratio over admissible balls and bank members.

    Returns ``(C, VerificationReport)``; ``C = inf`` when every pair is
    skipped because ``u`` vanishes on the ball.
    """
    if not bank:
        raise ValueError("bank must be nonempty")
    bt = space.balls
    mask = bt.admissible(radius_cap)
    wv = _vals(w)
    wb = bt.averages(wv)
    floor = np.minimum(bt.radius ** -p, wb)
    best, where, tested = np.inf, None, 0
    for b_idx, u in enumerate(bank):
        up = np.abs(u.values) ** p
        den_int = bt.sums(up)
        scale = np.abs(u.values).max() ** p
        ok = mask & (den_int > 1e-24 * scale * bt.mass)
        if not np.any(ok):
            continue
        tested += int(ok.sum())
        num = bt.sums(u.gradient**p + wv * up)
        ratio = np.where(ok, num / np.where(ok, floor * den_int, 1.0), np.inf)
        k = np.unravel_index(np.argmin(ratio), ratio.shape)
        if ratio[k] < best:
            best, where = float(ratio[k]), (int(k[0]), float(bt.radius[k]), b_idx)
    rep = VerificationReport(
        "fefferman_phong",
        {"C": best, "pairs_tested": tested},
        {"p": p, "radius_cap": radius_cap, "bank_size": len(bank)},
        passed=bool(best > 0),
        notes="vacuous: u vanishes on every ball" if where is None else
        f"attained at center={where[0]} radius={where[1]:.6g} bank#{where[2]}",
    )
    return best, rep


def default_bank(space: FiniteMetricMeasureSpace, seed: int = 0, n_random: int = 4):
    """Standard test functions for Poincare / Fefferman-Phong estimates.

    Coordinates, pairwise coordinate products, seeded low-frequency
    trigonometric fields (continuum functions, so refinements sample the
    same function) and, last, an alternating +1/-1 oscillation. The
    oscillation has zero central-difference gradient, so on grid-mode
    spaces it makes the Poincare constant infinite; drop it there.
    """
    fields = []
    if space.coords is not None:
        X = space.coords
        lo, hi = X.min(axis=0), X.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        for a in range(X.shape[1]):
            fields.append(X[:, a])
        for a in range(X.shape[1]):
            for b in range(a, X.shape[1]):
                fields.append(X[:, a] * X[:, b])
        rng = np.random.default_rng(seed)
        Y = (X - lo) / span
        for _ in range(n_random):
            acc = np.zeros(space.n)
            for k in range(1, 4):
                ph = rng.uniform(0, 2 * np.pi, size=X.shape[1])
                amp = rng.normal(size=X.shape[1]) / k
                acc += np.sum(amp * np.cos(np.pi * k * Y + ph), axis=1)
            fields.append(acc)
        parity = np.round((X - lo) / max(_min_gap(space), 1e-300)).astype(int).sum(axis=1) % 2
    else:
        rng = np.random.default_rng(seed)
        fields.append(space.distance[0].copy())
        for _ in range(n_random):
            fields.append(rng.normal(size=space.n))
        parity = np.arange(space.n) % 2
    fields.append(np.where(parity == 0, 1.0, -1.0))
    return [sobolev_function(space, f) for f in fields]


def _min_gap(space) -> float:
    if space.grid is not None:
        return space.grid.spacing
    d = space.distance
    pos = d[d > 0]
    return float(pos.min()) if pos.size else 1.0


def norm_ratio_maximal(space, field, p: float, radius_cap=None) -> float:
    """``||Mf||_p / ||f||_p``."""
    f = _vals(field)
    return lp_norm(space, maximal(space, f, radius_cap), p) / lp_norm(space, f, p)


def weak_11_constant(space, field, radius_cap=None) -> float:
    """``sup_lambda lambda * mu{Mf > lambda} / ||f||_1``, over the distinct levels of Mf."""
    f = _vals(field)
    Mf = maximal(space, f, radius_cap)
    levels = np.unique(Mf[Mf > 0])
    if levels.size == 0:
        return 0.0
    # lambda just below a level v gives v * mu{Mf >= v}
    order = np.argsort(Mf)
    cm = np.cumsum(space.measure[order][::-1])[::-1]
    idx = np.searchsorted(Mf[order], levels, side="left")
    vals = levels * cm[idx]
    return float(vals.max() / lp_norm(space, f, 1))
