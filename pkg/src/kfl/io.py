"""JSON and CSV persistence for spaces, weights, fields, decompositions and curves.

Floats are written with ``repr`` precision by :mod:`json`, so every file
round-trips exactly.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import calculus
from .rearrange import StepFunction
from .space import FiniteMetricMeasureSpace, GridInfo, SpaceError
from .weights import Weight

FORMAT_VERSION = 1


def _dump(obj, path):
    Path(path).write_text(json.dumps(obj, indent=1))


def _load(path, kind):
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpaceError(f"cannot read {path}: {exc}") from exc
    if obj.get("type") != kind:
        raise SpaceError(f"{path} is not a {kind} file")
    return obj


# ---------------------------------------------------------------- spaces

def space_to_dict(space: FiniteMetricMeasureSpace) -> dict:
    d = {"type": "space", "version": FORMAT_VERSION, "name": space.name,
         "gradient_mode": space.gradient_mode,
         "distance": space.distance.tolist(), "measure": space.measure.tolist()}
    if space.coords is not None:
        d["coords"] = space.coords.tolist()
    if space.adjacency is not None:
        d["adjacency"] = [a.tolist() for a in space.adjacency]
    if space.grid is not None:
        g = space.grid
        d["grid"] = {"dim": g.dim, "extent": [list(e) for e in g.extent], "spacing": g.spacing,
                     "shape": list(g.shape), "measure_mode": g.measure_mode}
    return d


def space_from_dict(d: dict, validate: bool = True) -> FiniteMetricMeasureSpace:
    grid = None
    if "grid" in d:
        g = d["grid"]
        grid = GridInfo(int(g["dim"]), tuple(tuple(e) for e in g["extent"]), float(g["spacing"]),
                        tuple(int(k) for k in g["shape"]), g["measure_mode"])
    adj = d.get("adjacency")
    space = FiniteMetricMeasureSpace(
        np.asarray(d["distance"], dtype=float), np.asarray(d["measure"], dtype=float),
        coords=None if d.get("coords") is None else np.asarray(d["coords"], dtype=float),
        adjacency=None if adj is None else tuple(np.asarray(a, dtype=int) for a in adj),
        grid=grid, gradient_mode=d.get("gradient_mode", "graph"), name=d.get("name", ""))
    if validate:
        space.validate()
    return space


def write_space(space, path):
    _dump(space_to_dict(space), path)


def read_space(path, validate: bool = True) -> FiniteMetricMeasureSpace:
    return space_from_dict(_load(path, "space"), validate)


# ---------------------------------------------------------------- weights and fields

def write_weight(w: Weight, path):
    params = {k: (v.tolist() if hasattr(v, "tolist") else v) for k, v in w.params.items()}
    _dump({"type": "weight", "version": FORMAT_VERSION, "kind": w.kind, "params": params,
           "values": w.values.tolist()}, path)


def read_weight(path) -> Weight:
    d = _load(path, "weight")
    return Weight(np.asarray(d["values"], dtype=float), d.get("kind", "explicit"), d.get("params", {}))


def write_function(values, path):
    _dump({"type": "function", "version": FORMAT_VERSION,
           "values": np.asarray(getattr(values, "values", values), dtype=float).tolist()}, path)


def read_function(path, space=None):
    """Field values; with ``space`` given, a SobolevFunction with its gradient."""
    vals = np.asarray(_load(path, "function")["values"], dtype=float)
    return vals if space is None else calculus.sobolev_function(space, vals)


def write_step(sf: StepFunction, path):
    _dump({"type": "step", "version": FORMAT_VERSION, **sf.to_dict()}, path)


def read_step(path) -> StepFunction:
    return StepFunction.from_dict(_load(path, "step"))


# ---------------------------------------------------------------- decompositions and reports

def decomposition_to_dict(space, V, decomp) -> dict:
    hom = decomp.homogeneous
    r, s = decomp.params["r"], decomp.params["s"]
    balls = []
    for pc in decomp.pieces:
        balls.append({
            "center": int(pc.ball.center), "radius": float(pc.ball.radius), "type": int(pc.type),
            "members": list(pc.ball.members), "mass": float(pc.ball.mass),
            "norm_r": calculus.sobolev_norm(space, V, pc.b, r, hom),
            "norm_s": calculus.sobolev_norm(space, V, pc.b, s, hom),
            "b": pc.b.values.tolist(),
        })
    return {"type": "decomposition", "version": FORMAT_VERSION, "alpha": decomp.alpha,
            "mode": decomp.mode, "params": {k: _num(v) for k, v in decomp.params.items()},
            "diagnostic": decomp.diagnostic, "omega": np.flatnonzero(decomp.omega).tolist(),
            "F": np.flatnonzero(decomp.f_set).tolist(), "g": decomp.g.values.tolist(),
            "balls": balls}


def _num(v):
    if isinstance(v, float) and not np.isfinite(v):
        return str(v)
    return v


def write_decomposition(space, V, decomp, path):
    _dump(decomposition_to_dict(space, V, decomp), path)


def write_report(reports, path):
    reps = reports if isinstance(reports, (list, tuple)) else [reports]
    _dump({"type": "report", "version": FORMAT_VERSION, "reports": [r.to_dict() for r in reps]}, path)


# ---------------------------------------------------------------- curves

def write_curve_csv(rows, path):
    """Rows of ``(t, K, method)``; floats at 12 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "K", "method"])
        for t, K, m in rows:
            w.writerow([f"{t:.12g}", f"{K:.12g}", m])


def read_curve_csv(path):
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        return [(float(r["t"]), float(r["K"]), r["method"]) for r in rd]
