"""Command-line front end: ``kfl <command> ...``.

All numerics live in the library; this module parses arguments, loads and
writes files and maps errors to exit codes (0 ok, 1 check failure, 2 usage
or domain error). Floats are printed with 12 significant digits.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import calculus, czd, io, kfunc, space as S, verify, weights as W
from .report import VerificationReport

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything a command needs; parameter order is checked before dispatch."""

    command: str
    space: Optional[str] = None
    weight: Optional[str] = None
    function: Optional[str] = None
    seed: int = 0
    r: float = 1.0
    s: Optional[float] = None
    p: float = 1.5
    q: float = 2.0
    alpha: Optional[float] = None
    tmin: float = 1e-3
    tmax: float = 1e3
    cap: Optional[float] = None
    out: Optional[str] = None
    mode: str = "nonhomogeneous"
    tolerance: dict = field(default_factory=dict)

    @property
    def s_value(self) -> float:
        return self.r if self.s is None else self.s


def fmt(x) -> str:
    return f"{x:.12g}" if isinstance(x, (float, np.floating)) else str(x)


def threads() -> int:
    try:
        return max(1, int(os.environ.get("KFL_THREADS", "1")))
    except ValueError:
        raise UsageError("KFL_THREADS must be an integer")


# ---------------------------------------------------------------- loaders

def load_space(path):
    if path is None:
        raise UsageError("--space is required")
    return io.read_space(path)


def parse_weight(source: Optional[str], sp) -> W.Weight:
    """A weight file, or ``kind[:key=value,...]`` such as ``power:alpha=0.25``.

    ``polynomial:coeffs=1;0;1`` gives ``1 + x^2``; ``constant`` gives 1.
    Without ``--weight`` the constant weight is used.
    """
    if source is None:
        return W.make_weight("constant", sp)
    if Path(source).is_file():
        w = io.read_weight(source)
        if w.values.shape != (sp.n,):
            raise UsageError("weight file does not match the space")
        return w
    kind, _, rest = source.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise UsageError(f"bad weight parameter {item!r}")
        params[key] = [float(v) for v in val.split(";")] if ";" in val or key == "coeffs" else float(val)
    return W.make_weight(kind, sp, **params)


def load_function(cfg: RunConfig, sp) -> calculus.SobolevFunction:
    if cfg.function is not None:
        vals = io.read_function(cfg.function)
        if vals.shape != (sp.n,):
            raise UsageError("function file does not match the space")
    else:
        if sp.coords is None:
            raise UsageError("random fields need coordinates; pass --function")
        vals = verify.smooth_field(sp, np.random.default_rng(cfg.seed))
    return calculus.sobolev_function(sp, vals)


def parse_tolerances(items) -> dict:
    out = {}
    for item in items or []:
        key, eq, val = item.partition("=")
        if not eq:
            raise UsageError(f"tolerance override must be name=value, got {item!r}")
        if key not in verify.TOLERANCES:
            raise UsageError(f"unknown tolerance {key!r}; known: {', '.join(verify.TOLERANCES)}")
        out[key] = float(val)
    return out


def emit_reports(reports, out: Optional[str]) -> int:
    for rep in reports:
        print(rep.line())
    if out:
        io.write_report(reports, out)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


# ---------------------------------------------------------------- commands

def cmd_space(cfg: RunConfig, args) -> int:
    if args.action == "build":
        kind = args.kind
        if kind == "grid":
            ext = args.extent if args.extent else [0.0, 1.0]
            sp = S.build_grid(args.dim, ext, args.spacing, args.measure)
        elif kind == "line":
            sp = S.line(args.points)
        elif kind == "cayley":
            sp = S.build_cayley_z2(args.radius)
        else:
            sp = S.build_polar(args.rings, args.angles, args.rmin)
        if cfg.out is None:
            raise UsageError("space build needs --out")
        io.write_space(sp, cfg.out)
        print(f"wrote {sp.n}-point space {sp.name!r} to {cfg.out}")
        return EXIT_OK
    sp = load_space(cfg.space)
    C, rep = S.doubling_constant(sp, cfg.cap)
    balls = S.enumerate_balls(sp, cfg.cap) if sp.n <= 400 else None
    print(f"points: {sp.n}")
    print(f"total_measure: {fmt(sp.total_measure)}")
    print(f"radius_cap: {fmt(cfg.cap) if cfg.cap is not None else 'none'}")
    print(f"doubling_constant: {fmt(C)}")
    print(f"attained_at: center={rep.center} r in ({fmt(rep.radius_interval[0])}, {fmt(rep.radius_interval[1])}]")
    if balls is not None:
        sizes = np.array([len(b.members) for b in balls])
        print(f"distinct_balls: {len(balls)}")
        print(f"ball_sizes: min={sizes.min()} median={fmt(float(np.median(sizes)))} max={sizes.max()}")
    return EXIT_OK


def cmd_weight(cfg: RunConfig, args) -> int:
    sp = load_space(cfg.space)
    w = parse_weight(cfg.weight, sp)
    if args.action == "audit":
        rhq = W.rh_constant(sp, w, cfg.q, cfg.cap)[0]
        rhi = W.rh_infinity_constant(sp, w, cfg.cap)[0]
        ap = W.ap_constant(sp, w, cfg.p, cfg.cap)
        rep = VerificationReport("weight_audit", {f"RH_{fmt(cfg.q)}": rhq, "RH_inf": rhi,
                                 f"A_{fmt(cfg.p)}": ap}, {"kind": w.kind, **w.params, "cap": cfg.cap},
                                 passed=bool(np.isfinite([rhq, rhi, ap]).all()))
        return emit_reports([rep], cfg.out)
    rep = W.rh_exponent_scan(sp, w, [cfg.q], cfg.cap, refinement_levels=args.levels)
    consts = rep.constants["constants"][cfg.q]
    for k, c in enumerate(consts):
        print(f"level {k}: RH_{fmt(cfg.q)} = {fmt(c)}")
    verdict = "in class" if rep.constants["in_class"][cfg.q] else "diverging"
    print(f"q={fmt(cfg.q)}: {verdict}")
    if cfg.out:
        io.write_report([rep], cfg.out)
    return EXIT_OK


def cmd_czd(cfg: RunConfig, args) -> int:
    if cfg.alpha is None:
        raise UsageError("czd needs --alpha")
    czd.check_order(cfg.r, cfg.s_value, cfg.p, cfg.q)
    sp = load_space(cfg.space)
    V = parse_weight(cfg.weight, sp)
    u = load_function(cfg, sp)
    d = czd.cz_decompose(sp, V, u, cfg.r, cfg.s_value, cfg.p, cfg.q, cfg.alpha, cfg.mode, cfg.cap)
    rep = czd.verify_cz(sp, V, d, cfg.p, f=u)
    balls = 0 if d.cover is None else len(d.cover)
    print(f"alpha: {fmt(d.alpha)}")
    print(f"mode: {d.mode}")
    print(f"omega_points: {int(d.omega.sum())}")
    print(f"balls: {balls}")
    if d.diagnostic:
        print(f"diagnostic: {d.diagnostic}")
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_decomposition(sp, V, d, out / "decomposition.json")
        io.write_report([rep], out / "report.json")
    return emit_reports([rep], None)


def cmd_kcurve(cfg: RunConfig, args) -> int:
    sp = load_space(cfg.space)
    V = parse_weight(cfg.weight, sp)
    u = load_function(cfg, sp)
    ts = kfunc.log_grid(cfg.tmin, cfg.tmax, args.points)
    with ThreadPoolExecutor(threads()) as pool:
        curves = kfunc.k_curves(sp, V, u, cfg.r, cfg.s_value, cfg.q, ts, cfg.mode, cfg.cap,
                                mapper=pool.map)
    rows = [row for c in curves.values() for row in c.rows()]
    if cfg.out:
        io.write_curve_csv(rows, cfg.out)
        print(f"wrote {len(rows)} rows to {cfg.out}")
    else:
        print("t,K,method")
        for t, K, m in rows:
            print(f"{t:.12g},{K:.12g},{m}")
    return EXIT_OK


def cmd_interp(cfg: RunConfig, args) -> int:
    sp = load_space(cfg.space)
    V = parse_weight(cfg.weight, sp)
    u = load_function(cfg, sp)
    val = kfunc.interp_norm(sp, V, u, cfg.r, cfg.q, cfg.p, cfg.mode, cfg.s_value, cfg.cap)
    ref = calculus.sobolev_norm(sp, V, u, cfg.p, cfg.mode == "homogeneous")
    print(f"theta: {fmt(kfunc.theta(cfg.r, cfg.q, cfg.p))}")
    print(f"interp_norm: {fmt(val)}")
    print(f"sobolev_norm_p: {fmt(ref)}")
    print(f"ratio: {fmt(val / ref) if ref > 0 else 'undefined'}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    reports = verify.run_suite(args.suite, cfg.tolerance, cfg.space)
    code = emit_reports(reports, cfg.out)
    passed = sum(r.passed for r in reports)
    extra = ""
    if cfg.tolerance:
        extra = "; overrides " + ", ".join(f"{k}={fmt(v)}" for k, v in cfg.tolerance.items())
    print(f"summary: {passed}/{len(reports)} passed{extra}")
    return code


COMMANDS = {"space": cmd_space, "weight": cmd_weight, "czd": cmd_czd, "kcurve": cmd_kcurve,
            "interp": cmd_interp, "verify": cmd_verify}


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--space", help="space file (JSON)")
    common.add_argument("--weight", help="weight file or kind:key=value,... (e.g. power:alpha=0.25)")
    common.add_argument("--function", help="function file; default is a seeded random field")
    common.add_argument("--r", type=float, default=1.0)
    common.add_argument("--s", type=float, default=None, help="defaults to r")
    common.add_argument("--p", type=float, default=1.5)
    common.add_argument("--q", type=float, default=2.0, help="may be inf")
    common.add_argument("--alpha", type=float)
    common.add_argument("--tmin", type=float, default=1e-3)
    common.add_argument("--tmax", type=float, default=1e3)
    common.add_argument("--cap", type=float, help="radius cap for admissible balls")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output path")
    common.add_argument("--mode", choices=czd.MODES, default="nonhomogeneous")
    common.add_argument("--tolerance", action="append", metavar="NAME=VALUE",
                        help="override a verification tolerance (repeatable)")

    ap = argparse.ArgumentParser(prog="kfl", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("space", parents=[common], help="build or audit a space")
    sp.add_argument("action", choices=["build", "audit"])
    sp.add_argument("kind", nargs="?", choices=["grid", "line", "cayley", "polar"], default="grid")
    sp.add_argument("--dim", type=int, default=1)
    sp.add_argument("--extent", type=float, nargs=2, metavar=("LO", "HI"))
    sp.add_argument("--spacing", type=float, default=1.0)
    sp.add_argument("--measure", choices=["counting", "cell"], default="counting")
    sp.add_argument("--points", type=int, default=8)
    sp.add_argument("--radius", type=int, default=3)
    sp.add_argument("--rings", type=int, default=24)
    sp.add_argument("--angles", type=int, default=16)
    sp.add_argument("--rmin", type=float, default=1e-3)

    wp = sub.add_parser("weight", parents=[common], help="audit a weight or scan its RH exponent")
    wp.add_argument("action", choices=["audit", "scan"])
    wp.add_argument("--levels", type=int, default=6)

    sub.add_parser("czd", parents=[common], help="Calderon-Zygmund decomposition and its report")

    kp = sub.add_parser("kcurve", parents=[common], help="K-functional curves as CSV")
    kp.add_argument("--points", type=int, default=33)

    sub.add_parser("interp", parents=[common], help="interpolation norm of one function")

    vp = sub.add_parser("verify", parents=[common], help="run verification suites")
    vp.add_argument("suite", nargs="?", default="all",
                    choices=["all", "acceptance", *verify.SUITES])
    return ap


def make_config(args) -> RunConfig:
    cfg = RunConfig(command=args.command, space=args.space, weight=args.weight,
                    function=args.function, seed=args.seed, r=args.r, s=args.s, p=args.p, q=args.q,
                    alpha=args.alpha, tmin=args.tmin, tmax=args.tmax, cap=args.cap, out=args.out,
                    mode=args.mode, tolerance=parse_tolerances(args.tolerance))
    if not 0 < cfg.tmin < cfg.tmax:
        raise UsageError("need 0 < tmin < tmax")
    if cfg.cap is not None and not cfg.cap > 0:
        raise UsageError("--cap must be positive")
    if cfg.command in ("kcurve", "interp"):
        czd.check_order(cfg.r, cfg.s_value, cfg.s_value, cfg.q)
    return cfg


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = make_config(args)
        return COMMANDS[cfg.command](cfg, args)
    except (ValueError, KeyError) as exc:
        print(f"kfl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
