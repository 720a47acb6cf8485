"""Finite metric measure spaces, open balls and the doubling constant.

A space is a distance matrix plus a positive measure vector. Balls are open:
``B(x, r) = {y : d(x, y) < r}``. On a finite space every ball is a prefix of
the points sorted by distance from its center, so all ball statistics are
computed from per-center cumulative sums (see :class:`BallTable`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

MAX_POINTS = 10_000
MAX_CAYLEY_RADIUS = 50
# relative tolerance under which two distances count as equal
TIE_TOL = 1e-12


class SpaceError(ValueError):
    """Invalid space construction or parameters."""


@dataclass(frozen=True)
class GridInfo:
    dim: int
    extent: tuple  # ((lo, hi), ...) per axis
    spacing: float
    shape: tuple
    measure_mode: str

    def refined(self, level: int) -> "GridInfo":
        return GridInfo(self.dim, self.extent, self.spacing / 2**level,
                        self.shape, self.measure_mode)


@dataclass(frozen=True, eq=False)
class FiniteMetricMeasureSpace:
    distance: np.ndarray
    measure: np.ndarray
    coords: Optional[np.ndarray] = None
    adjacency: Optional[tuple] = None
    grid: Optional[GridInfo] = None
    gradient_mode: str = "graph"
    name: str = ""

    def __post_init__(self):
        d = np.asarray(self.distance, dtype=float)
        mu = np.asarray(self.measure, dtype=float).ravel()
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise SpaceError("distance must be a square matrix")
        if mu.shape[0] != d.shape[0]:
            raise SpaceError("measure length does not match distance matrix")
        if d.shape[0] == 0:
            raise SpaceError("empty space")
        if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
            raise SpaceError("every point mass must be finite and > 0")
        if self.gradient_mode not in ("grid", "graph"):
            raise SpaceError(f"unknown gradient mode {self.gradient_mode!r}")
        if self.gradient_mode == "grid" and self.grid is None:
            raise SpaceError("grid gradient mode needs grid information")
        d.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "distance", d)
        object.__setattr__(self, "measure", mu)
        if self.coords is not None:
            c = np.asarray(self.coords, dtype=float)
            if c.ndim == 1:
                c = c[:, None]
            c.setflags(write=False)
            object.__setattr__(self, "coords", c)
        if self.adjacency is not None:
            adj = tuple(np.asarray(a, dtype=int) for a in self.adjacency)
            if len(adj) != self.n:
                raise SpaceError("adjacency must list neighbours for every point")
            object.__setattr__(self, "adjacency", adj)

    @property
    def n(self) -> int:
        return self.distance.shape[0]

    @property
    def total_measure(self) -> float:
        return float(self.measure.sum())

    @cached_property
    def balls(self) -> "BallTable":
        return BallTable(self)

    @cached_property
    def neighbours(self) -> tuple:
        """Adjacency used by the graph gradient.

        Explicit adjacency wins; otherwise ``x ~ y`` when no third point lies
        metrically between them (``d(x,z) + d(z,y) = d(x,y)``).
        """
        if self.adjacency is not None:
            return self.adjacency
        d = self.distance
        n = self.n
        out = []
        for x in range(n):
            via = d[x][:, None] + d  # via[z, y] = d(x,z) + d(z,y)
            np.fill_diagonal(via, np.inf)
            via[x, :] = np.inf
            between = np.isclose(via, d[x][None, :], rtol=1e-12, atol=0.0)
            blocked = between.any(axis=0)
            nb = [y for y in range(n) if y != x and not blocked[y]]
            out.append(np.asarray(nb, dtype=int))
        return tuple(out)

    @cached_property
    def edges(self):
        """Directed neighbour pairs ``(src, dst, dist)`` sorted by ``src``."""
        src, dst = [], []
        for x, nb in enumerate(self.neighbours):
            src.extend([x] * len(nb))
            dst.extend(int(y) for y in nb)
        src = np.asarray(src, dtype=int)
        dst = np.asarray(dst, dtype=int)
        return src, dst, self.distance[src, dst]

    def validate(self) -> None:
        """Check symmetry, zero diagonal and the triangle inequality (O(n^3))."""
        d = self.distance
        scale = max(1.0, float(d.max()))
        if not np.allclose(d, d.T, rtol=0, atol=TIE_TOL * scale):
            raise SpaceError("distance matrix is not symmetric")
        if np.any(np.diag(d) != 0):
            raise SpaceError("distance matrix has nonzero diagonal")
        off = d + np.eye(self.n)
        if np.any(off <= 0) or not np.all(np.isfinite(d)):
            raise SpaceError("distinct points must be at positive finite distance")
        for k in range(self.n):
            if np.any(d > d[:, k, None] + d[None, k, :] + TIE_TOL * scale):
                raise SpaceError(f"triangle inequality fails through point {k}")

    def open_ball(self, center: int, radius: float) -> "Ball":
        if radius <= 0:
            raise SpaceError("radius must be positive")
        row = self.distance[center]
        members = np.flatnonzero(row < radius - TIE_TOL * max(1.0, radius))
        return Ball(int(center), float(radius), tuple(int(i) for i in members),
                    float(self.measure[members].sum()))

    def refine(self, level: int) -> "FiniteMetricMeasureSpace":
        """Same grid with spacing divided by ``2**level``."""
        if self.grid is None:
            raise SpaceError("only grid spaces can be refined")
        g = self.grid
        return build_grid(g.dim, [list(e) for e in g.extent], g.spacing / 2**level,
                          g.measure_mode, gradient_mode=self.gradient_mode)


@dataclass(frozen=True)
class Ball:
    center: int
    radius: float
    members: tuple
    mass: float

    def __contains__(self, i) -> bool:
        return int(i) in self.members


class BallTable:
    """All open balls of a finite space, indexed by (center, sorted position).

    Row ``c`` lists points by increasing distance from ``c``. The ball "at"
    position ``j`` is the prefix ending with the last point tied with
    position ``j``; positions sharing a distance level share a ball, so
    max/min reductions over the table are reductions over all balls.
    """

    def __init__(self, space: FiniteMetricMeasureSpace):
        d = space.distance
        n = space.n
        self.space = space
        self.order = np.argsort(d, axis=1, kind="stable")
        self.sorted_d = np.take_along_axis(d, self.order, axis=1)
        self.rank = np.empty_like(self.order)
        np.put_along_axis(self.rank, self.order, np.arange(n)[None, :].repeat(n, 0), axis=1)

        sd = self.sorted_d
        gap = np.diff(sd, axis=1) > TIE_TOL * np.maximum(1.0, sd[:, 1:])
        is_end = np.ones((n, n), dtype=bool)
        is_end[:, :-1] = gap
        self.is_end = is_end
        # end position of the level containing each position
        idx = np.where(is_end, np.arange(n)[None, :], n)
        self.end = np.minimum.accumulate(idx[:, ::-1], axis=1)[:, ::-1]
        level_d = np.take_along_axis(sd, self.end, axis=1)
        nxt = np.minimum(self.end + 1, n - 1)
        next_d = np.take_along_axis(sd, nxt, axis=1)
        full = self.end == n - 1
        far = sd[:, -1:]
        full_r = np.where(far > 0, 1.5 * far, 1.0)
        self.radius = np.where(full, np.broadcast_to(full_r, (n, n)), 0.5 * (level_d + next_d))
        self.level_distance = level_d
        self.mass = self.sums(np.ones(n))

    @property
    def n(self) -> int:
        return self.order.shape[0]

    def sums(self, values) -> np.ndarray:
        """Per-position ball integrals  sum_{i in B} values_i mu_i."""
        v = np.asarray(values, dtype=float) * self.space.measure
        cs = np.cumsum(v[self.order], axis=1)
        return np.take_along_axis(cs, self.end, axis=1)

    def averages(self, values) -> np.ndarray:
        return self.sums(values) / self.mass

    def maxima(self, values) -> np.ndarray:
        """Per-position max of ``values`` over the ball."""
        v = np.asarray(values, dtype=float)[self.order]
        return np.take_along_axis(np.maximum.accumulate(v, axis=1), self.end, axis=1)

    @cached_property
    def diameter(self) -> np.ndarray:
        """Per-position diameter of the ball (largest member-to-member distance)."""
        d = self.space.distance
        n = self.n
        out = np.empty((n, n))
        for c in range(n):
            o = self.order[c]
            sub = d[np.ix_(o, o)]
            row_max = np.max(np.tril(sub), axis=1)
            out[c] = np.maximum.accumulate(row_max)
        return np.take_along_axis(out, self.end, axis=1)

    def admissible(self, radius_cap: Optional[float] = None) -> np.ndarray:
        """Boolean mask of one representative position per admissible ball.

        With a cap, a ball is admitted when its diameter is below the cap.
        """
        mask = self.is_end.copy()
        if radius_cap is not None:
            mask &= self.diameter < radius_cap
        return mask

    def members(self, c: int, j: int) -> np.ndarray:
        return self.order[c, : self.end[c, j] + 1]


def _check_cap(radius_cap):
    if radius_cap is not None and not radius_cap > 0:
        raise SpaceError("radius_cap must be positive")


def from_matrix(distance, measure=None, coords=None, adjacency=None, validate=True,
                name="") -> FiniteMetricMeasureSpace:
    d = np.asarray(distance, dtype=float)
    mu = np.ones(d.shape[0]) if measure is None else measure
    space = FiniteMetricMeasureSpace(d, mu, coords=coords, adjacency=adjacency, name=name)
    if validate:
        space.validate()
    return space


def from_points(points, measure=None, adjacency=None, validate=False, name=""):
    """Euclidean space on the given coordinates."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    return from_matrix(d, measure, coords=pts, adjacency=adjacency, validate=validate,
                       name=name)


def build_grid(dim: int, extent, spacing: float, measure_mode: str = "counting",
               gradient_mode: str = "grid") -> FiniteMetricMeasureSpace:
    """Regular grid in one or two dimensions with Euclidean distances.

    Parameters
    ----------
    dim : 1 or 2
    extent : ``[lo, hi]`` or ``[[lo, hi], [lo, hi]]``; a bare pair is reused
        for every axis.
    spacing : grid step h > 0.
    measure_mode : ``"counting"`` (mass 1) or ``"cell"`` (mass h**dim).
    gradient_mode : ``"grid"`` central differences or ``"graph"`` upper gradient.
    """
    if dim not in (1, 2):
        raise SpaceError("dim must be 1 or 2")
    if not spacing > 0:
        raise SpaceError("spacing must be positive")
    if measure_mode in ("cell-volume", "cell_volume"):
        measure_mode = "cell"
    if measure_mode not in ("counting", "cell"):
        raise SpaceError(f"unknown measure mode {measure_mode!r}")
    ext = np.asarray(extent, dtype=float)
    if ext.ndim == 1:
        ext = np.tile(ext, (dim, 1))
    if ext.shape != (dim, 2) or np.any(ext[:, 1] < ext[:, 0]):
        raise SpaceError("extent must give lo <= hi per axis")
    counts = np.floor((ext[:, 1] - ext[:, 0]) / spacing + 1e-9).astype(int) + 1
    if np.prod(counts.astype(float)) > MAX_POINTS:
        raise SpaceError(f"grid would have {int(np.prod(counts))} points (cap {MAX_POINTS})")
    axes = [lo + spacing * np.arange(k) for (lo, _), k in zip(ext, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    n = pts.shape[0]
    mu = np.ones(n) if measure_mode == "counting" else np.full(n, spacing**dim)

    shape = tuple(int(k) for k in counts)
    idx = np.arange(n).reshape(shape)
    nbrs = [[] for _ in range(n)]
    for ax in range(dim):
        a = np.moveaxis(idx, ax, 0)
        for lo_i, hi_i in zip(a[:-1].ravel(), a[1:].ravel()):
            nbrs[lo_i].append(hi_i)
            nbrs[hi_i].append(lo_i)
    adjacency = tuple(np.asarray(sorted(v), dtype=int) for v in nbrs)
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    info = GridInfo(dim, tuple(tuple(e) for e in ext.tolist()), float(spacing), shape,
                    measure_mode)
    return FiniteMetricMeasureSpace(d, mu, coords=pts, adjacency=adjacency, grid=info,
                                    gradient_mode=gradient_mode,
                                    name=f"grid{dim}d h={spacing:g}")


def build_cayley_z2(radius: int) -> FiniteMetricMeasureSpace:
    """Ball of radius ``radius`` in the Cayley graph of Z^2 (word metric = l1)."""
    if radius < 0 or int(radius) != radius:
        raise SpaceError("radius must be a nonnegative integer")
    if radius > MAX_CAYLEY_RADIUS:
        raise SpaceError(f"radius capped at {MAX_CAYLEY_RADIUS}")
    R = int(radius)
    pts = np.array([(x, y) for x in range(-R, R + 1) for y in range(-R, R + 1)
                    if abs(x) + abs(y) <= R], dtype=float).reshape(-1, 2)
    d = np.abs(pts[:, None, :] - pts[None, :, :]).sum(-1)
    adjacency = tuple(np.flatnonzero(row == 1) for row in d)
    return FiniteMetricMeasureSpace(d, np.ones(len(pts)), coords=pts, adjacency=adjacency,
                                    gradient_mode="graph", name=f"cayley-z2 R={R}")


def build_polar(n_rings: int, n_angles: int, r_min: float, r_max: float = 1.0) -> FiniteMetricMeasureSpace:
    """Log-polar mesh of the disc of radius ``r_max`` with area measure.

    Ring radii are geometric between ``r_min`` and ``r_max``; the origin is
    one extra point carrying the inner disc. Every scale between ``r_min``
    and ``r_max`` is resolved by the same number of points, which makes the
    mesh a good host for scale-invariant profiles. Adjacency joins angular
    and radial neighbours; the gradient is the graph upper gradient.
    """
    if n_rings < 1 or n_angles < 3 or not 0 < r_min < r_max:
        raise SpaceError("need n_rings >= 1, n_angles >= 3 and 0 < r_min < r_max")
    if n_rings * n_angles + 1 > MAX_POINTS:
        raise SpaceError(f"mesh would exceed {MAX_POINTS} points")
    radii = np.geomspace(r_min, r_max, n_rings)
    q = radii[1] / radii[0] if n_rings > 1 else 2.0
    theta = 2 * np.pi * np.arange(n_angles) / n_angles
    R, TH = np.meshgrid(radii, theta, indexing="ij")
    pts = np.vstack([[0.0, 0.0], np.stack([(R * np.cos(TH)).ravel(), (R * np.sin(TH)).ravel()], 1)])
    # ring k owns the annulus between the geometric midpoints of its neighbours
    inner = radii / np.sqrt(q)
    outer = np.minimum(radii * np.sqrt(q), r_max)
    cell = np.pi * (outer**2 - inner**2) / n_angles
    mu = np.concatenate([[np.pi * inner[0] ** 2], np.repeat(cell, n_angles)])

    def pid(k, j):
        return 1 + k * n_angles + (j % n_angles)

    nbrs = [[] for _ in range(len(pts))]
    for k in range(n_rings):
        for j in range(n_angles):
            a = pid(k, j)
            nbrs[a] += [pid(k, j - 1), pid(k, j + 1)]
            nbrs[a].append(pid(k - 1, j) if k > 0 else 0)
            if k + 1 < n_rings:
                nbrs[a].append(pid(k + 1, j))
    nbrs[0] = [pid(0, j) for j in range(n_angles)]
    adjacency = tuple(np.asarray(sorted(set(v)), dtype=int) for v in nbrs)
    return from_points(pts, measure=mu, adjacency=adjacency,
                       name=f"polar {n_rings}x{n_angles} r_min={r_min:g}")


def enumerate_balls(space: FiniteMetricMeasureSpace, radius_cap: Optional[float] = None):
    """Distinct open balls of ``space`` (one per member set).

    Each ball carries the smallest representative radius among the centers
    realising it; representative radii sit midway between the consecutive
    distances delimiting the set (1.5x the farthest distance for the ball
    holding every point). A cap admits balls whose diameter is below it.
    Intended for small spaces; constant estimators use :class:`BallTable`.
    """
    _check_cap(radius_cap)
    bt = space.balls
    mask = bt.admissible(radius_cap)
    found = {}
    for c, j in zip(*np.nonzero(mask)):
        members = tuple(sorted(int(i) for i in bt.members(c, j)))
        r = float(bt.radius[c, j])
        prev = found.get(members)
        if prev is None or r < prev.radius:
            found[members] = Ball(int(c), r, members, float(bt.mass[c, j]))
    return sorted(found.values(), key=lambda b: (len(b.members), b.members))


@dataclass
class DoublingReport:
    constant: float
    center: int
    radius_interval: tuple
    notes: str = ""


def doubling_constant(space: FiniteMetricMeasureSpace, radius_cap: Optional[float] = None):
    """Largest ratio mu(B(x, 2r)) / mu(B(x, r)) over all centers and radii.

    The ratio is piecewise constant in r with breaks where r or 2r equals a
    distance from x, so checking the right end of every such interval is
    exhaustive. With a cap only radii with 2r < cap are considered.

    Returns ``(constant, DoublingReport)``.
    """
    _check_cap(radius_cap)
    bt = space.balls
    mu = space.measure
    best = (1.0, 0, (0.0, np.inf))
    for c in range(space.n):
        sd = bt.sorted_d[c]
        cm = np.concatenate([[0.0], np.cumsum(mu[bt.order[c]])])
        pos = sd[sd > 0]
        if pos.size == 0:
            continue
        crit = np.unique(np.concatenate([pos, pos / 2]))
        prev = np.concatenate([[0.0], crit[:-1]])
        if radius_cap is not None:
            keep = prev < radius_cap / 2
            crit, prev = crit[keep], prev[keep]
            if crit.size == 0:
                continue

        def mass(r):
            return cm[np.searchsorted(sd, r - TIE_TOL * np.maximum(1.0, r), side="right")]

        ratio = mass(2 * crit) / mass(crit)
        k = int(np.argmax(ratio))
        if ratio[k] > best[0] + 1e-15:
            best = (float(ratio[k]), c, (float(prev[k]), float(crit[k])))
    const, c, interval = best
    return const, DoublingReport(const, c, interval,
                                 notes="ratio attained for r in the half-open interval (lo, hi]")


def ball_average(space: FiniteMetricMeasureSpace, ball: Ball, field) -> float:
    members = np.asarray(ball.members, dtype=int)
    if members.size == 0:
        raise SpaceError("ball has no members")
    f = np.asarray(field, dtype=float)
    if f.shape[0] != space.n:
        raise SpaceError("field length does not match space")
    mu = space.measure[members]
    return float(np.dot(f[members], mu) / mu.sum())


def line(n_points: int, gradient_mode: str = "graph", measure=None) -> FiniteMetricMeasureSpace:
    """Unit-spaced points 0..n-1 on a line with path adjacency."""
    pts = np.arange(n_points, dtype=float)
    adj = tuple(np.asarray([j for j in (i - 1, i + 1) if 0 <= j < n_points]) for i in range(n_points))
    if gradient_mode == "grid":
        space = build_grid(1, [0, n_points - 1], 1.0)
        if measure is not None:
            space = FiniteMetricMeasureSpace(space.distance, measure, coords=space.coords,
                                             adjacency=space.adjacency, grid=space.grid,
                                             gradient_mode="grid", name=space.name)
        return space
    return from_points(pts, measure=measure, adjacency=adj, name=f"line{n_points}")
