"""Decreasing rearrangements as exact step functions.

On a finite measure space ``f*`` is a step function on ``[0, mu(M))``, so
every integral used here (``f**``, Holmstedt's formula, the Hardy
inequality) has a closed form and no quadrature is involved.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .report import VerificationReport


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Nonnegative step function: ``values[k]`` on ``[breaks[k], breaks[k+1])``.

    ``breaks`` has one more entry than ``values`` and starts at 0; the
    function is 0 beyond ``breaks[-1]``.
    """

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if b.size != v.size + 1:
            raise ValueError("need len(breaks) == len(values) + 1")
        if b.size and (b[0] != 0 or np.any(np.diff(b) <= 0)):
            raise ValueError("breaks must start at 0 and increase strictly")
        if np.any(v < 0):
            raise ValueError("step values must be nonnegative")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)

    @classmethod
    def zero(cls) -> "StepFunction":
        return cls(np.array([0.0]), np.array([]))

    @property
    def support_end(self) -> float:
        return float(self.breaks[-1])

    @property
    def is_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.values) <= 0))

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return bool(np.array_equal(self.breaks, other.breaks) and np.array_equal(self.values, other.values))

    __hash__ = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(self.breaks, t, side="right") - 1
        inside = (k >= 0) & (k < self.values.size)
        out = np.where(inside, self.values[np.clip(k, 0, max(self.values.size - 1, 0))]
                       if self.values.size else 0.0, 0.0)
        return out if out.ndim else float(out)

    def power(self, p: float) -> "StepFunction":
        return StepFunction(self.breaks, self.values**p)

    def scaled(self, lam: float) -> "StepFunction":
        return StepFunction(self.breaks, abs(lam) * self.values)

    def integral(self, a=0.0, b=np.inf):
        """``int_a^b`` of the step function (vectorised in ``a`` and ``b``)."""
        return self._antiderivative(b) - self._antiderivative(a)

    def _antiderivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.values.size == 0:
            return np.zeros_like(t) if t.ndim else 0.0
        cum = np.concatenate([[0.0], np.cumsum(self.values * np.diff(self.breaks))])
        tc = np.clip(t, 0.0, self.breaks[-1])
        k = np.clip(np.searchsorted(self.breaks, tc, side="right") - 1, 0, self.values.size - 1)
        out = cum[k] + self.values[k] * (tc - self.breaks[k])
        return out if out.ndim else float(out)

    def level_measure(self, lam):
        """Length of ``{t : value(t) > lam}``."""
        widths = np.diff(self.breaks)
        lam = np.asarray(lam, dtype=float)
        out = np.sum(widths[None, :] * (self.values[None, :] > lam.reshape(-1, 1)), axis=1)
        return out.reshape(lam.shape) if lam.ndim else float(out[0])

    def to_dict(self) -> dict:
        return {"breaks": self.breaks.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d) -> "StepFunction":
        return cls(d["breaks"], d["values"])


def decreasing_rearrangement(space, field) -> StepFunction:
    """Exact ``f*``: points sorted by ``|f|`` descending, widths ``mu_i``, ties merged."""
    a = np.abs(np.asarray(getattr(field, "values", field), dtype=float))
    mu = np.asarray(space.measure if hasattr(space, "measure") else space, dtype=float)
    keep = a > 0
    a, mu = a[keep], mu[keep]
    if a.size == 0:
        return StepFunction.zero()
    order = np.argsort(-a, kind="stable")
    a, mu = a[order], mu[order]
    new = np.r_[True, a[1:] != a[:-1]]
    starts = np.flatnonzero(new)
    vals = a[starts]
    widths = np.add.reduceat(mu, starts)
    return StepFunction(np.concatenate([[0.0], np.cumsum(widths)]), vals)


def double_star(sf: StepFunction, t):
    """``f**(t) = (1/t) int_0^t f*``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    out = sf.integral(0.0, t) / t
    return out if np.ndim(out) else float(out)


def holmstedt_k(sf: StepFunction, p0: float, p1: float, t):
    """Holmstedt's expression for ``K(f, t; L_p0, L_p1)``.

    ``(int_0^{t^a} f*^p0)^(1/p0) + t (int_{t^a}^inf f*^p1)^(1/p1)`` with
    ``1/a = 1/p0 - 1/p1``.
    """
    if not 0 < p0 < p1 < np.inf:
        raise ValueError("need 0 < p0 < p1 < inf")
    t = np.asarray(t, dtype=float)
    a = 1.0 / (1.0 / p0 - 1.0 / p1)
    tau = t**a
    head = sf.power(p0).integral(0.0, tau) ** (1.0 / p0)
    tail = sf.power(p1).integral(tau, np.inf)
    tail = np.maximum(tail, 0.0) ** (1.0 / p1)
    out = head + t * tail
    return out if np.ndim(out) else float(out)


def sum_integral(parts, a, b):
    """``int_a^b sum_k parts[k]`` for step functions rearranged separately."""
    return sum(p.integral(a, b) for p in parts)


def hardy_sides(g: StepFunction, l: float):
    """Both sides of the Hardy inequality for a compactly supported step ``g``.

    left  = int_0^inf (int_t^inf g) t^(l-1) dt
    right = (1/l) int_0^inf u g(u) u^(l-1) du
    """
    if not 0 < l <= 1:
        raise ValueError("l must lie in (0, 1]")
    b, v = g.breaks, g.values
    if v.size == 0:
        return 0.0, 0.0
    lo, hi = b[:-1], b[1:]
    # tail integral G(t) = int_t^inf g is affine on each piece: G(t) = A - v t
    G_hi = np.concatenate([np.cumsum((v * (hi - lo))[::-1])[::-1][1:], [0.0]])
    A = G_hi + v * hi
    left = np.sum(A * (hi**l - lo**l) / l - v * (hi ** (l + 1) - lo ** (l + 1)) / (l + 1))
    right = np.sum(v * (hi ** (l + 1) - lo ** (l + 1)) / (l + 1)) / l
    return float(left), float(right)


def hardy_check(g: StepFunction, l: float, rtol: float = 1e-12) -> VerificationReport:
    left, right = hardy_sides(g, l)
    ok = left <= right * (1 + rtol) + 1e-300
    return VerificationReport("hardy", {"lhs": left, "rhs": right}, {"l": l}, passed=bool(ok))
