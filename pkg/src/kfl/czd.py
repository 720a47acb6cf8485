"""Calderon-Zygmund decomposition of Sobolev functions on finite spaces.

The bad set is ``Omega = {M T_s f > alpha^s}`` (``T`` replaced by its
homogeneous version when requested). It is covered by a greedy Whitney
family of balls, a smoothstep partition of unity is attached to the cover,
and ``f`` is split as ``g + sum_i b_i`` with ``b_i = f chi_i`` on balls where
the potential is large (type 1) and ``b_i = (f - f_B) chi_i`` elsewhere
(type 2).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import calculus
from .calculus import SobolevFunction
from .report import VerificationReport
from .space import Ball, FiniteMetricMeasureSpace

C1 = 5.0
C2 = 4 * C1


class DomainError(ValueError):
    """Parameters outside the admissible range."""


class CoverError(RuntimeError):
    """A construction invariant failed; only possible for a non-metric input."""


def _v(x) -> np.ndarray:
    return np.asarray(getattr(x, "values", x), dtype=float)


# ---------------------------------------------------------------- level set

def level_set_omega(space: FiniteMetricMeasureSpace, V, u: SobolevFunction, s: float, alpha: float,
                    homogeneous: bool = False, radius_cap: Optional[float] = None):
    """Return boolean masks ``(omega, F)`` with ``omega = {M T_s u > alpha^s}``.

    ``F`` empty means the whole space is bad ("omega-full"); callers decide
    how to handle that case.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    T = calculus.t_r(space, V, u, s, homogeneous)
    MT = calculus.maximal(space, T, radius_cap)
    omega = MT > alpha**s
    return omega, ~omega


def omega_full(F) -> bool:
    return not np.any(F)


# ---------------------------------------------------------------- Whitney

@dataclass(frozen=True)
class WhitneyCover:
    """Greedy Whitney family. Balls are open; ``radii = d(center, F) / 2``."""

    centers: np.ndarray
    radii: np.ndarray
    cover: np.ndarray          # (k, n) membership of B(x_i, r_i)
    selection: np.ndarray      # (k, n) membership of B(x_i, r_i / C1)
    security: np.ndarray       # (k, n) membership of B(x_i, C2 r_i / C1)
    c1: float = C1
    c2: float = C2

    def __len__(self) -> int:
        return int(self.centers.size)

    @property
    def overlap(self) -> np.ndarray:
        return self.cover.sum(axis=0)

    def ball(self, space, i: int) -> Ball:
        return space.open_ball(int(self.centers[i]), float(self.radii[i]))

    def check(self, space, omega) -> dict:
        """Evaluate every structural invariant exactly; values are booleans."""
        omega = np.asarray(omega, dtype=bool)
        F = ~omega
        k = len(self)
        if k == 0:
            return {"disjoint": True, "covers": not omega.any(), "radius": True,
                    "security_meets_F": True, "comparable": True}
        sel = self.selection.astype(int)
        disjoint = bool(np.all(sel.sum(axis=0) <= 1))
        covers = bool(np.array_equal(self.cover.any(axis=0), omega))
        dF = space.distance[np.ix_(self.centers, np.flatnonzero(F))].min(axis=1)
        radius = bool(np.all(self.radii == dF / 2))
        meets = bool(np.all(self.security[:, F].any(axis=1)))
        inter = (self.cover.astype(int) @ self.cover.T.astype(int)) > 0
        ri, rj = np.meshgrid(self.radii, self.radii, indexing="ij")
        comparable = bool(np.all(~inter | ((rj <= 3 * ri) & (ri <= 3 * rj))))
        return {"disjoint": disjoint, "covers": covers, "radius": radius,
                "security_meets_F": meets, "comparable": comparable}


def whitney(space: FiniteMetricMeasureSpace, omega, c1: float = C1) -> WhitneyCover:
    """Greedy Whitney cover of ``omega``.

    Points of ``omega`` are visited by decreasing ``r(x) = d(x, F)/2`` and
    kept when ``B(x, r(x)/c1)`` misses every earlier selection ball. A
    skipped ``x`` then lies within ``2 r(y)/c1 < r(y)`` of a kept ``y``, so
    the balls ``B(y, r(y))`` cover ``omega``.
    """
    omega = np.asarray(omega, dtype=bool)
    n = space.n
    c2 = 4 * c1
    empty = np.zeros((0, n), dtype=bool)
    if not omega.any():
        return WhitneyCover(np.zeros(0, int), np.zeros(0), empty, empty, empty, c1, c2)
    F = ~omega
    if not F.any():
        raise DomainError("Whitney cover needs a nonempty complement")
    d = space.distance
    pts = np.flatnonzero(omega)
    r = d[np.ix_(pts, np.flatnonzero(F))].min(axis=1) / 2
    order = np.lexsort((pts, -r))
    taken = np.zeros(n, dtype=bool)
    centers, radii = [], []
    for k in order:
        x = pts[k]
        sel = d[x] < r[k] / c1
        if not (sel & taken).any():
            taken |= sel
            centers.append(x)
            radii.append(r[k])
    centers = np.asarray(centers, dtype=int)
    radii = np.asarray(radii)
    D = d[centers]
    cover = D < radii[:, None]
    if not np.array_equal(cover.any(axis=0), omega):
        raise CoverError("Whitney balls do not cover omega exactly")
    return WhitneyCover(centers, radii, cover, D < (radii / c1)[:, None],
                        D < (c2 * radii / c1)[:, None], c1, c2)


# ---------------------------------------------------------------- partition

def smoothstep(t, c1: float = C1):
    """Cubic profile: 1 on ``[0, 1]``, 0 on ``[(1 + c1)/2, inf)``, C^1 in between."""
    t = np.asarray(t, dtype=float)
    hi = (1 + c1) / 2
    x = np.clip((t - 1) / (hi - 1), 0.0, 1.0)
    return 1.0 - x * x * (3 - 2 * x)


@dataclass(frozen=True)
class Partition:
    chi: np.ndarray            # (k, n)
    denominator: np.ndarray    # (n,)

    def __len__(self) -> int:
        return self.chi.shape[0]


def partition_of_unity(space: FiniteMetricMeasureSpace, cover: WhitneyCover) -> Partition:
    """``chi_i = psi_i / sum_k psi_k`` with ``psi_i(x) = smoothstep(c1 d(x_i, x)/r_i)``.

    Each ``psi_i`` vanishes at distance ``>= (1 + c1) r_i/(2 c1) < r_i``, so
    ``supp chi_i`` sits inside ``B_i``. On ``omega`` the denominator is at
    least ``smoothstep(2) = 1/2``: a point is either a center or within
    ``2 r_j/c1`` of some center ``x_j``.
    """
    if len(cover) == 0:
        raise DomainError("empty cover")
    D = space.distance[cover.centers]
    psi = smoothstep(cover.c1 * D / cover.radii[:, None], cover.c1)
    den = psi.sum(axis=0)
    omega = cover.cover.any(axis=0)
    floor = float(smoothstep(2.0, cover.c1))
    if np.any(den[omega] < floor * (1 - 1e-12)):
        raise CoverError("partition denominator below its guaranteed floor on omega")
    chi = np.zeros_like(psi)
    chi[:, omega] = psi[:, omega] / den[omega]
    return Partition(chi, den)


# ---------------------------------------------------------------- decomposition

@dataclass(frozen=True)
class CZPiece:
    b: SobolevFunction
    ball: Ball
    type: int


@dataclass
class CZDecomposition:
    alpha: float
    omega: np.ndarray
    f_set: np.ndarray
    cover: Optional[WhitneyCover]
    partition: Optional[Partition]
    g: SobolevFunction
    pieces: List[CZPiece]
    mode: str
    params: dict
    diagnostic: str = ""

    @property
    def homogeneous(self) -> bool:
        return self.mode.startswith("homogeneous")

    @property
    def bad_part(self) -> np.ndarray:
        """Values of ``sum_i b_i``."""
        out = np.zeros_like(self.g.values)
        for p in self.pieces:
            out += p.b.values
        return out


MODES = ("nonhomogeneous", "homogeneous")


def _mode_name(mode: str, q: float) -> str:
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}")
    return f"{mode}-{'qinf' if np.isinf(q) else 'q'}"


def check_order(r, s, p, q):
    if not (1 <= r <= s <= p < q):
        raise DomainError(f"need 1 <= r <= s <= p < q, got r={r}, s={s}, p={p}, q={q}")


def cz_decompose(space: FiniteMetricMeasureSpace, V, u: SobolevFunction, r: float, s: float,
                 p: float, q: float, alpha: float, mode: str = "nonhomogeneous",
                 radius_cap: Optional[float] = None) -> CZDecomposition:
    """Split ``u = g + sum_i b_i`` at level ``alpha``.

    ``mode`` is ``"nonhomogeneous"`` or ``"homogeneous"``; ``q = inf`` selects
    the bounded-gradient variant. Gradients of ``g`` and of every ``b_i`` are
    recomputed with the space's discrete gradient.
    """
    check_order(r, s, p, q)
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    name = _mode_name(mode, q)
    homogeneous = mode == "homogeneous"
    params = {"r": r, "s": s, "p": p, "q": q, "radius_cap": radius_cap}
    omega, F = level_set_omega(space, V, u, s, alpha, homogeneous, radius_cap)
    if not omega.any():
        return CZDecomposition(alpha, omega, F, None, None, u, [], name, params,
                               "omega empty: identity decomposition")
    if not F.any():
        n = space.n
        whole = Ball(0, float("inf"), tuple(range(n)), space.total_measure)
        zero = SobolevFunction(np.zeros(n), np.zeros(n))
        return CZDecomposition(alpha, omega, F, None, None, zero, [CZPiece(u, whole, 1)], name,
                               params, "omega-full: g = 0 and a single piece b = f")
    cover = whitney(space, omega)
    part = partition_of_unity(space, cover)
    f = u.values
    mu = space.measure
    Vs = _v(V) ** s
    pieces, vals = [], []
    for i in range(len(cover)):
        inside = cover.cover[i]
        m = mu[inside].sum()
        v_avg = np.dot(Vs[inside], mu[inside]) / m
        t = 1 if v_avg >= cover.radii[i] ** (-s) else 2
        if t == 1:
            b = f * part.chi[i]
        else:
            b = (f - np.dot(f[inside], mu[inside]) / m) * part.chi[i]
        vals.append(b)
        ball = Ball(int(cover.centers[i]), float(cover.radii[i]),
                    tuple(np.flatnonzero(inside).tolist()), float(m))
        pieces.append((ball, t))
    B = np.asarray(vals)
    grads = calculus.gradient_batch(space, B)
    pieces = [CZPiece(SobolevFunction(B[i], grads[i]), ball, t) for i, (ball, t) in enumerate(pieces)]
    g_vals = f - B.sum(axis=0)
    g_vals[F] = f[F]
    g = calculus.sobolev_function(space, g_vals)
    return CZDecomposition(alpha, omega, F, cover, part, g, pieces, name, params)


def _integral(space, x) -> float:
    return float(np.dot(x, space.measure))


def verify_cz(space: FiniteMetricMeasureSpace, V, decomp: CZDecomposition, p: float,
              f: Optional[SobolevFunction] = None) -> VerificationReport:
    """Measure the best constants of the decomposition properties.

    C2  : ``int_Omega T_q g / (alpha^q mu(Omega))``          (q finite)
    Cinf: ``||g||_{W_inf} / alpha``                            (q infinite)
    C3  : ``max_i int T_s b_i / (alpha^s mu(B_i))``
    C4  : ``alpha^p sum_i mu(B_i) / int T_p f``
    N   : largest number of balls containing a point
    Cr  : ``max_i ||b_i||_{W_r} / (alpha mu(B_i)^(1/r))``

    The ``b_i`` integrals run over the whole space: the discrete gradient of
    ``b_i`` may reach one grid step outside ``B_i``, and the whole-space
    value is the one that enters the K-functional. ``f`` defaults to
    ``g + sum b_i``. Passes when every constant is finite.
    """
    hom = decomp.homogeneous
    a = decomp.alpha
    r, s, q = decomp.params["r"], decomp.params["s"], decomp.params["q"]
    if f is None:
        f = calculus.sobolev_function(space, decomp.g.values + decomp.bad_part)
    mu = space.measure
    union = np.zeros(space.n, dtype=bool)
    for pc in decomp.pieces:
        union[list(pc.ball.members)] = True
    m_union = float(mu[union].sum())
    consts = {}
    if np.isinf(q):
        consts["Cinf"] = calculus.sobolev_norm(space, V, decomp.g, np.inf, hom) / a
    else:
        Tq = calculus.t_r(space, V, decomp.g, q, hom)
        consts["C2"] = float(np.dot(Tq[union], mu[union]) / (a**q * m_union)) if m_union else 0.0
    c3, cr = 0.0, 0.0
    for pc in decomp.pieces:
        c3 = max(c3, _integral(space, calculus.t_r(space, V, pc.b, s, hom)) / (a**s * pc.ball.mass))
        cr = max(cr, calculus.sobolev_norm(space, V, pc.b, r, hom) / (a * pc.ball.mass ** (1.0 / r)))
    consts["C3"] = c3
    Tp = _integral(space, calculus.t_r(space, V, f, p, hom))
    total = sum(pc.ball.mass for pc in decomp.pieces)
    consts["C4"] = a**p * total / Tp if Tp > 0 else (0.0 if total == 0 else np.inf)
    if decomp.cover is not None and len(decomp.cover):
        consts["N"] = int(decomp.cover.overlap.max())
    else:
        consts["N"] = len(decomp.pieces)
    consts["Cr"] = cr
    ok = all(np.isfinite(float(v)) for v in consts.values())
    return VerificationReport("cz", consts, {"alpha": a, "p": p, "mode": decomp.mode,
                                             "balls": len(decomp.pieces)}, passed=ok,
                              notes=decomp.diagnostic)
