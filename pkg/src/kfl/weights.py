"""Weights and reverse-Holder / Muckenhoupt constant auditing.

All constants are maxima over the enumerated open balls of the space (see
:class:`kfl.space.BallTable`); a ``radius_cap`` restricts to small balls and
models the local classes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import calculus
from .report import VerificationReport
from .space import FiniteMetricMeasureSpace, SpaceError


class WeightError(ValueError):
    pass


class UnsupportedError(WeightError):
    """Operation not available for this kind of weight or space."""


@dataclass(frozen=True)
class Weight:
    values: np.ndarray
    kind: str = "explicit"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise WeightError("weight values must be finite and >= 0")
        if not np.any(v > 0):
            raise WeightError("weight is identically zero")
        object.__setattr__(self, "values", v)

    def __pow__(self, e):
        return Weight(self.values**e)

    def __mul__(self, lam):
        return Weight(self.values * float(lam))

    __rmul__ = __mul__


def _w(w) -> np.ndarray:
    return np.asarray(getattr(w, "values", w), dtype=float)


def _min_spacing(space) -> float:
    if space.grid is not None:
        return space.grid.spacing
    pos = space.distance[space.distance > 0]
    return float(pos.min()) if pos.size else 1.0


def make_weight(kind: str, space: FiniteMetricMeasureSpace, **params) -> Weight:
    """Sample a weight on ``space``.

    Kinds
    -----
    constant : ``c`` (default 1).
    power : ``alpha`` -> ``|x|^-alpha``; for alpha > 0 the value at x = 0 is
        replaced by the value at distance spacing/2.
    polynomial : ``coeffs`` ``[c0, c1, ...]`` -> ``c0 + sum_k c_k sum_i x_i^k``
        (the usual polynomial in 1-D; ``1 + |x|^2`` from ``[1, 0, 1]`` in 2-D).
    maximal : ``f`` (field) and ``exponent`` (default 1) -> ``(Mf)^exponent``,
        optional ``radius_cap``.
    explicit : ``values``.
    """
    if kind == "constant":
        c = float(params.get("c", 1.0))
        return Weight(np.full(space.n, c), "constant", {"c": c})
    if kind == "power":
        if space.coords is None:
            raise UnsupportedError("power weights need coordinates")
        alpha = float(params.get("alpha", 0.0))
        r = np.linalg.norm(space.coords, axis=1)
        if alpha > 0:
            r = np.where(r > 0, r, _min_spacing(space) / 2)
        with np.errstate(divide="ignore"):
            vals = np.where(r > 0, r, 0.0) ** (-alpha) if alpha != 0 else np.ones(space.n)
        return Weight(vals, "power", {"alpha": alpha})
    if kind == "polynomial":
        if space.coords is None:
            raise UnsupportedError("polynomial weights need coordinates")
        coeffs = [float(c) for c in params.get("coeffs", [1.0])]
        X = space.coords
        vals = np.full(space.n, coeffs[0] if coeffs else 0.0)
        for k, c in enumerate(coeffs[1:], start=1):
            vals = vals + c * np.sum(X**k, axis=1)
        if np.any(vals < 0):
            raise WeightError("polynomial is negative somewhere on the space")
        return Weight(vals, "polynomial", {"coeffs": coeffs})
    if kind == "maximal":
        if "f" not in params:
            raise UnsupportedError("maximal weights need a field f")
        f = np.asarray(params["f"], dtype=float)
        e = float(params.get("exponent", 1.0))
        Mf = calculus.maximal(space, f, params.get("radius_cap"))
        if e < 0 and np.any(Mf == 0):
            raise WeightError("Mf vanishes somewhere; negative exponent undefined")
        return Weight(Mf**e, "maximal", {"f": f.tolist(), "exponent": e,
                                           "radius_cap": params.get("radius_cap")})
    if kind == "explicit":
        return Weight(np.asarray(params["values"], dtype=float), "explicit", {})
    raise WeightError(f"unknown weight kind {kind!r}")


def resample(w: Weight, space: FiniteMetricMeasureSpace) -> Weight:
    """Regenerate a generated weight on another (e.g. refined) space."""
    if w.kind not in ("constant", "power", "polynomial"):
        raise UnsupportedError(f"{w.kind} weights cannot be resampled")
    return make_weight(w.kind, space, **w.params)


def _ball_report(name, ratio, mask, space, params, finite_ok=True):
    bt = space.balls
    ratio = np.where(mask, ratio, -np.inf)
    k = np.unravel_index(np.argmax(ratio), ratio.shape)
    C = float(ratio[k])
    members = bt.members(*k)
    rep = VerificationReport(name, {"C": C}, params, passed=bool(np.isfinite(C)),
                             notes=f"attained on ball center={int(k[0])} "
                                   f"radius={bt.radius[k]:.6g} size={members.size}")
    return C, rep


def rh_constant(space: FiniteMetricMeasureSpace, w, q: float, radius_cap: Optional[float] = None):
    """Reverse-Holder constant ``max_B (avg_B w^q)^(1/q) / avg_B w``.

    A ball on which ``w`` averages to zero gives an infinite constant.
    Returns ``(C, VerificationReport)``.
    """
    if not q > 1:
        raise WeightError("q must be > 1")
    v = _w(w)
    bt = space.balls
    mean = bt.averages(v)
    top = bt.averages(v**q) ** (1.0 / q)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mean > 0, top / mean, np.inf)
    return _ball_report("rh", ratio, bt.admissible(radius_cap), space,
                        {"q": q, "radius_cap": radius_cap})


def rh_infinity_constant(space: FiniteMetricMeasureSpace, w, radius_cap: Optional[float] = None):
    """``max_B max_{x in B} w(x) / avg_B w``.  Returns ``(C, report)``."""
    v = _w(w)
    bt = space.balls
    mean = bt.averages(v)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mean > 0, bt.maxima(v) / mean, np.inf)
    return _ball_report("rh_inf", ratio, bt.admissible(radius_cap), space,
                        {"radius_cap": radius_cap})


def ap_constant(space: FiniteMetricMeasureSpace, w, p: float, radius_cap: Optional[float] = None) -> float:
    """Muckenhoupt constant ``max_B (avg_B w)(avg_B w^(-1/(p-1)))^(p-1)``."""
    if not p > 1:
        raise WeightError("p must be > 1")
    v = _w(w)
    if np.any(v <= 0):
        raise WeightError("A_p auditing needs a strictly positive weight")
    bt = space.balls
    val = bt.averages(v) * bt.averages(v ** (-1.0 / (p - 1))) ** (p - 1)
    return float(np.max(np.where(bt.admissible(radius_cap), val, -np.inf)))


def best_ap(space, w, ps: Sequence[float] = (2.0, 4.0, 8.0), radius_cap=None):
    """Scan ``p`` and return ``(p, A_p constant)`` with the smallest constant."""
    vals = [(p, ap_constant(space, w, p, radius_cap)) for p in ps]
    return min(vals, key=lambda t: t[1])


def rh_power_law_check(space, w, r: float, radius_cap: Optional[float] = None) -> VerificationReport:
    """Finite RH_{1/r} constant of ``w^r`` (the A_infinity characterisation)."""
    if not 0 < r < 1:
        raise WeightError("r must lie in (0, 1)")
    C, _ = rh_constant(space, _w(w) ** r, 1.0 / r, radius_cap)
    return VerificationReport("rh_power_law", {"C": C}, {"r": r, "q": 1.0 / r,
                              "radius_cap": radius_cap}, passed=bool(np.isfinite(C)))


STABILITY_WINDOW = 0.05


def rh_exponent_scan(space: FiniteMetricMeasureSpace, w: Weight, q_grid: Sequence[float],
                     radius_cap: Optional[float] = None, refinement_levels: int = 4,
                     window: float = STABILITY_WINDOW) -> VerificationReport:
    """Estimate the largest reverse-Holder exponent by a refinement study.

    The weight is resampled on ``refinement_levels`` dyadic refinements of
    the grid. ``q`` counts as in class when the constant changes by less
    than ``window`` (relative) between the two finest levels; the exponent
    estimate is the largest in-class ``q`` (``None`` if there is none).
    """
    if space.grid is None:
        raise UnsupportedError("exponent scans need a refinable grid space")
    if refinement_levels < 2:
        raise WeightError("need at least two refinement levels")
    q_grid = [float(q) for q in q_grid]
    if any(b <= a for a, b in zip(q_grid, q_grid[1:])):
        raise WeightError("q_grid must be increasing")
    spaces = [space.refine(k) for k in range(refinement_levels)]
    ws = [resample(w, s) for s in spaces]
    table, in_class = {}, {}
    for q in q_grid:
        consts = [rh_constant(s, wk, q, radius_cap)[0] for s, wk in zip(spaces, ws)]
        table[q] = consts
        a, b = consts[-2], consts[-1]
        in_class[q] = bool(np.isfinite(a) and np.isfinite(b) and abs(b - a) < window * a)
    members = [q for q in q_grid if in_class[q]]
    q0 = max(members) if members else None
    return VerificationReport(
        "rh_exponent_scan",
        {"q0": q0, "in_class": in_class, "constants": table},
        {"q_grid": q_grid, "levels": refinement_levels, "window": window,
         "radius_cap": radius_cap, "kind": w.kind, **w.params},
        passed=q0 is not None,
    )
