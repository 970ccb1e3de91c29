"""``gammaconvex run <config> [--out DIR] [--seed N] [--threads N]``.

Exit codes: 0 success, 2 a verdict-level failure, 1 an error.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..barriers import make_params, verify_barrier
from ..errors import GammaConvexError, IterationDivergence
from ..geometry import (Modulus, blow_up_cone, classify_point, cone_check, dini_classify,
                        find_support_direction)
from ..iteration import (AdversarialOracle, FixedOracle, IterationInputs, RandomOracle, check_claims,
                         corner_run, fit_corner_constant, fit_gap_constant, flat_run, gap_bounds,
                         gap_dominated)
from ..solver.cascade import cascade_value
from ..solver.experiments import corrupted, probe_quotient, sandwich_experiment, sharpness_experiment
from ..solver.grid import solve_region
from .config import ExperimentConfig, parse_config
from .fixtures import coefficients_from, graph_fixture, profile_from, region_fixture

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VERDICT = 2

HEADERS = {
    "dini": ("kind", "c", "exponent", "verdict", "value", "tol"),
    "classify": ("domain", "x0", "point_class", "theta_lo", "theta_hi", "width", "residual",
                 "cone_check", "support_angle"),
    "barrier-verify": ("property", "region", "min_slack", "argmin", "status"),
    "iterate-corner": ("m", "K", "B", "K_plus_scaled_B", "bracket", "ratio"),
    "iterate-flat": ("m", "branch", "k", "K", "b", "B", "gap", "gap_bound"),
    "solve": ("x1", "x2", "u"),
    "solve-summary": ("domain", "h", "unknowns", "u0", "min_u", "residual"),
    "sandwich": ("m", "h", "nodes", "upper_margin", "lower_margin", "slack", "status"),
    "probe": ("k", "t_k", "q_k", "verdict"),
    "probe-summary": ("verdict", "a", "residual", "h_finest"),
    "sharpness": ("family", "parameter", "dini_verdict", "dini_value", "probe_verdict", "a",
                  "min_growth", "max_growth", "consistent", "note"),
}


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    if v is None:
        return ""
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise GammaConvexError(f"row width {len(row)} does not match header {header}")
            w.writerow([fmt(v) for v in row])
    return path


class Context:
    def __init__(self, out: Path, seed: int, threads: int, cfg: ExperimentConfig):
        self.out = out
        self.seed = seed
        self.threads = threads
        self.cfg = cfg
        self.written = []

    def path(self, suffix: str = "") -> Path:
        stem = self.cfg.output or f"{self.cfg.command}.csv"
        p = self.out / stem
        if suffix:
            p = p.with_name(f"{p.stem}_{suffix}{p.suffix or '.csv'}")
        return p

    def write(self, key: str, rows, suffix: str = "") -> None:
        self.written.append(write_csv(self.path(suffix), HEADERS[key], rows))


def _modulus(p) -> Modulus:
    kind = p["kind"]
    if kind == "zero":
        return Modulus.zero(p["R0"])
    if kind == "power":
        if p["p"] is None:
            raise GammaConvexError("power modulus needs key 'p'")
        return Modulus.power(p["c"], p["p"], p["R0"])
    if p["q"] is None:
        raise GammaConvexError("logpower modulus needs key 'q'")
    return Modulus.logpower(p["c"], p["q"], p["R0"])


def run_dini(ctx: Context) -> int:
    p = ctx.cfg.params
    gamma = _modulus(p)
    rep = dini_classify(gamma, tol=p["tol"])
    exponent = {"zero": None, "power": p["p"], "logpower": p["q"]}[p["kind"]]
    ctx.write("dini", [(p["kind"], p["c"], exponent, rep.verdict.value, rep.value, p["tol"])])
    return EXIT_OK


def _graph_modulus(name: str, alpha: float, q: float) -> Modulus:
    if name == "power-cusp":
        return Modulus.power(1.0, alpha)
    if name == "log-cusp":
        return Modulus.logpower(1.0, q)
    return Modulus.zero()


def run_classify(ctx: Context) -> int:
    p = ctx.cfg.params
    dom = graph_fixture(p["domain"], p["alpha"], p["q"])
    x0 = dom.boundary_point(p["x0"])
    sector = blow_up_cone(dom, x0, residual_tol=p["residual_tol"])
    cls = classify_point(dom, x0, angle_tol=p["angle_tol"])
    ok = cone_check(sector, probes=p["probes"], seed=ctx.seed)
    eta = find_support_direction(dom, x0, _graph_modulus(p["domain"], p["alpha"], p["q"]))
    angle = None if eta is None else math.atan2(eta.eta[1], eta.eta[0])
    ctx.write("classify", [(p["domain"], p["x0"], cls.value, sector.theta_lo, sector.theta_hi,
                            sector.width, sector.residual, ok, angle)])
    return EXIT_OK if ok else EXIT_VERDICT


def run_barrier(ctx: Context) -> int:
    p = ctx.cfg.params
    params = make_params(p["n"], p["lam"], M=p["M"], delta=p["delta"], epsilon=p["epsilon"],
                         strict=p["strict"])
    if p["g"]:
        params = type(params)(params.n, params.lam, params.M, params.delta, params.epsilon, p["g"],
                              strict=params.strict)
    rep = verify_barrier(params, Modulus.zero(), sample_budget=p["samples"], seed=ctx.seed)
    rows = [(r.pid, r.region, r.min_slack, ";".join(fmt(float(v)) for v in r.argmin),
             "pass" if r.passed else "fail") for r in rep.properties]
    ctx.write("barrier-verify", rows)
    return EXIT_OK if rep.passed else EXIT_VERDICT


def _inputs(p) -> IterationInputs:
    n, lam = p["n"], p["lam"]
    sigma = profile_from(p["sigma"], p["sigma_c"], p["sigma_beta"], n, lam)
    f = profile_from(p["f"], p["f_c"], p["f_beta"], n, lam, share=0.1)
    over = {k: p[k] for k in ("delta", "mu", "M", "A1", "A2") if p[k] is not None}
    return IterationInputs.defaults(n, lam, f=f, sigma=sigma, **over)


def run_corner(ctx: Context) -> int:
    p = ctx.cfg.params
    inputs = _inputs(p)
    try:
        states = corner_run(inputs, p["m_max"])
    except IterationDivergence as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_VERDICT
    C, ratios = fit_corner_constant(states, inputs, m_from=0)
    rows = []
    for s, r in zip(states, ratios):
        tot = s.K + s.beta
        rows.append((s.m, s.K, s.B, tot, tot / r if r else float("nan"), r))
    ctx.write("iterate-corner", rows)
    return EXIT_OK if np.all(np.isfinite(ratios)) else EXIT_VERDICT


def _oracle(name: str, seed: int):
    if name == "random":
        return RandomOracle(seed)
    if name == "adversarial":
        return AdversarialOracle()
    return FixedOracle(name)


def run_flat(ctx: Context) -> int:
    p = ctx.cfg.params
    inputs = _inputs(p)
    try:
        run = flat_run(inputs, _oracle(p["oracle"], ctx.seed), p["m_max"])
    except IterationDivergence as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_VERDICT
    C6, _ = fit_gap_constant(run, inputs)
    bounds = C6 * gap_bounds(inputs, len(run.states) - 1)
    hist = run.states[-1].branch_history
    rows = []
    for i, s in enumerate(run.states):
        # gap after step m is bounded by gap_bound(m - 1)
        b = bounds[i - 1] if i >= 1 else float("nan")
        rows.append((s.m, hist[i - 1] if i >= 1 else "", s.k, s.K, s.b, s.B, s.gap, b))
    ctx.write("iterate-flat", rows)
    claims = check_claims(run, tol=p["tol"])
    ok = claims.all_hold and gap_dominated(run, inputs, C6)
    return EXIT_OK if ok else EXIT_VERDICT


def run_solve(ctx: Context) -> int:
    p = ctx.cfg.params
    region = region_fixture(p["domain"], p["alpha"], p["q"])
    coeffs = coefficients_from(p)
    if p["sandwich"]:
        amount = p["corrupt"]

        def plant(levels, scale):
            if not amount:
                return levels
            x, y = p["corrupt_at"]
            return [corrupted(levels[0], x, y, amount * scale)] + list(levels[1:])

        res = sandwich_experiment(region, coeffs, p["rhs"], p["delta"], p["m_max"], p["cells"],
                                  tol=p["tol"], perturb=plant)
        ctx.write("sandwich", [(r.m, r.h, r.nodes, r.upper_margin, r.lower_margin, r.slack,
                                "pass" if r.passed else "fail") for r in res.rows], "sandwich")
        top = res.levels[0]
        mins = min(lev.min_value for lev in res.levels)
        u0 = cascade_value(res.levels, 0.0, 0.0) if bool(region.contains(0.0, 0.0)) else float("nan")
        ctx.write("solve-summary", [(p["domain"], top.h, top.problem.n_unknowns, u0, mins,
                                     top.residual)], "summary")
        ok = res.passed and (p["rhs"] < 0 or mins >= 0)
        return EXIT_OK if ok else EXIT_VERDICT
    field = solve_region(region, coeffs, p["rhs"], p["h"], tol=p["tol"])
    if p["write_field"]:
        ctx.write("solve", field.rows())
    u0 = field.interpolate([0.0], [0.0])[0] if bool(region.contains(0.0, 0.0)) else float("nan")
    ctx.write("solve-summary", [(p["domain"], field.h, field.problem.n_unknowns, float(u0),
                                 field.min_value, field.residual)], "summary")
    return EXIT_OK if (p["rhs"] < 0 or field.min_value >= 0) else EXIT_VERDICT


def run_probe(ctx: Context) -> int:
    p = ctx.cfg.params
    region = region_fixture(p["domain"], p["alpha"], p["q"])
    rep, levels = probe_quotient(region, coefficients_from(p), p["rhs"], p["x0"], p["l"],
                                 (p["k_min"], p["k_max"]), p["cells"])
    h_fin = min(lev.h for lev in levels)
    if p["h"] is not None and h_fin > p["h"] * (1 + 1e-12):
        raise GammaConvexError(f"finest probe spacing {h_fin:g} exceeds h = {p['h']:g}")
    ctx.write("probe", rep.rows())
    ctx.write("probe-summary", [(rep.verdict.value, rep.a, rep.residual, h_fin)], "summary")
    return EXIT_OK


def run_sharpness(ctx: Context) -> int:
    p = ctx.cfg.params
    finest = 16 * 2.0 ** -p["k_max"] / p["cells"]
    if p["h"] is not None and finest > p["h"] * (1 + 1e-12):
        raise GammaConvexError(f"finest probe spacing {finest:g} exceeds h = {p['h']:g}")
    rows = sharpness_experiment(p["alpha_grid"], p["q_grid"], p["wedge"], (p["k_min"], p["k_max"]),
                                p["cells"], threads=ctx.threads)
    ctx.write("sharpness", [(r.family, r.parameter, r.dini.value, r.dini_value, r.probe.value, r.a,
                             r.min_growth, r.max_growth, r.consistent, r.note) for r in rows])
    return EXIT_OK if all(r.consistent for r in rows) else EXIT_VERDICT


DISPATCH = {
    "dini": run_dini,
    "classify": run_classify,
    "barrier-verify": run_barrier,
    "iterate-corner": run_corner,
    "iterate-flat": run_flat,
    "solve": run_solve,
    "probe": run_probe,
    "sharpness": run_sharpness,
}


def run_suite(cfg: ExperimentConfig, out=".", seed: int = 0, threads: int = 1):
    """Run one config; returns ``(exit_code, written_paths)``."""
    ctx = Context(Path(out), seed, threads, cfg)
    code = DISPATCH[cfg.command](ctx)
    return code, ctx.written


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gammaconvex")
    sub = ap.add_subparsers(dest="action", required=True)
    run = sub.add_parser("run", help="run one experiment config")
    run.add_argument("config", type=Path)
    run.add_argument("--out", type=Path, default=Path("."))
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--threads", type=int, default=1)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_ERROR
    try:
        cfg = parse_config(args.config.read_text())
        code, written = run_suite(cfg, args.out, args.seed, args.threads)
    except (OSError, GammaConvexError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for path in written:
        print(path)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
