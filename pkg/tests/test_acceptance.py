"""Acceptance suite: one PASS/FAIL summary line per criterion.

Each criterion test records its line through ``acceptance_report`` and then
asserts the attainable checks.  Two sub-checks cannot hold for mathematical
reasons; they print FAIL and have their own strict xfail tests below.
"""
import math
import time

import numpy as np
import pytest

from gammaconvex.barriers import (
    away_from_kinks, default_constants, hessian_fd_error, make_params, verify_barrier)
from gammaconvex.geometry import (
    DiniVerdict, Modulus, blow_up_cone, cone_check, dini_classify, find_support_direction,
    log_cusp_graph, parabola_graph, power_cusp_graph, reflex_graph, wedge_graph)
from gammaconvex.iteration import (
    AdversarialOracle, IterationInputs, Profile, RandomOracle, check_claims, corner_bound, corner_run,
    fit_corner_constant, fit_gap_constant, flat_run, gap_dominated)
from gammaconvex.solver import grid
from gammaconvex.solver.experiments import ProbeVerdict, probe_quotient, sandwich_experiment
from gammaconvex.solver.grid import discretize
from gammaconvex.solver.regions import Disk, GraphRegion, HalfDisk

from conftest import SOLVE_LOG, max_principle_violations

CS = default_constants(2, 1.0).C_small
BETAS = (0.5, 1.0, 1.5)


def dini_inputs(beta):
    return IterationInputs.defaults(sigma=Profile.power(CS, beta), f=Profile.power(0.1 * CS, beta))


# -- 1. Dini dichotomy ------------------------------------------------------------------

def antiderivative_value(kind, c, e):
    # int_0^1 c r^(p-2) dr = c/(p-1);  int_0^1 c / (r ln^q(e/r)) dr = c/(q-1)
    return c / (e - 1)


def test_1_dini_dichotomy(acceptance_report):
    start = time.perf_counter()
    bad = []
    worst = 0.0
    count = 0
    for kind in ("power", "logpower"):
        for e in (0.5, 1.0, 1.5, 2.0):
            for c in (0.5, 1.0, 2.0):
                gamma = Modulus.power(c, e) if kind == "power" else Modulus.logpower(c, e)
                rep = dini_classify(gamma, tol=1e-8)
                count += 1
                expect = DiniVerdict.CONVERGENT if e > 1 else DiniVerdict.DIVERGENT
                if rep.verdict is not expect:
                    bad.append((kind, e, c, rep.verdict))
                elif e > 1:
                    err = abs(rep.value - antiderivative_value(kind, c, e))
                    worst = max(worst, err)
                    if err > 1e-8:
                        bad.append((kind, e, c, err))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 1.0
    acceptance_report(1, "Dini dichotomy", ok,
                      f"{count} moduli, max value error {worst:.2e}, {elapsed:.2f} s")
    assert not bad, bad
    assert elapsed < 1.0


# -- 2. Barrier certification ------------------------------------------------------------

GRID = [(n, lam) for n in (2, 3) for lam in (1.0, 0.5, 0.25)]


def barrier_grid():
    reports, fd = [], []
    rng = np.random.default_rng(2)
    for n, lam in GRID:
        p = make_params(n, lam)
        reports.append(verify_barrier(p, Modulus.zero(), sample_budget=10_000))
        Md = p.M * p.delta
        pts = np.column_stack([rng.uniform(-Md, Md, (600, n - 1)), rng.uniform(0, p.delta, 600)])
        pts = pts[away_from_kinks(p, pts)][:100]
        fd.append(hessian_fd_error(p, pts, h=1e-5))
    return reports, fd


def test_2_barrier_certification(acceptance_report):
    start = time.perf_counter()
    reports, fd = barrier_grid()
    elapsed = time.perf_counter() - start
    nonneg = all(r.passed and len(r.properties) == 10 for r in reports)
    zero_slack = sorted({p.pid for r in reports for p in r.properties if p.min_slack <= 0})
    positive = not zero_slack
    fd_ok = max(fd) < 1e-6
    ok = nonneg and positive and fd_ok and elapsed < 10
    detail = (f"{len(GRID)} constant sets, slack >= -1e-12 on all 10 properties: {nonneg}; "
              f"strictly positive slack: {positive} (exact equality in {', '.join(zero_slack)}); "
              f"max Hessian FD error {max(fd):.1e}; {elapsed:.1f} s")
    acceptance_report(2, "Barrier certification", ok, detail)
    assert nonneg
    assert fd_ok
    assert elapsed < 10


@pytest.mark.xfail(strict=True, reason="equality is attained on the bottom face and by the worst-case operator")
def test_2_barrier_slack_strictly_positive():
    reports, _ = barrier_grid()
    assert all(p.min_slack > 0 for r in reports for p in r.properties)


# -- 3. Corner iteration --------------------------------------------------------------------

def test_3_corner_iteration(acceptance_report):
    inp = IterationInputs.defaults()
    states = corner_run(inp, 50)
    closed = max(abs(s.K - inp.mu ** s.m * inp.M) / (inp.mu ** s.m * inp.M) for s in states[1:])
    closed_ok = closed <= 1e-14 and all(s.B == 0.0 for s in states[1:])
    sups, dominated = [], True
    for beta in BETAS:
        dinp = dini_inputs(beta)
        run = corner_run(dinp, 50)
        totals = np.array([s.K + s.beta for s in run])
        sups.append(float(totals.max()))
        # fitted on m <= 30, checked on every step to 50
        C, _ = fit_corner_constant(run[:31], dinp)
        for s in run[2:]:
            r = dinp.delta ** s.m
            dominated &= s.K * r + s.B <= corner_bound(r, dinp, C) * (1 + 1e-6)
    bounded = all(math.isfinite(v) for v in sups)
    ok = closed_ok and bounded and dominated
    acceptance_report(3, "Corner iteration", ok,
                      f"zero-profile relative error {closed:.1e}; sup K+B/delta^m "
                      f"{', '.join(f'{v:.4g}' for v in sups)} for beta {BETAS}; corner_bound dominates: {dominated}")
    assert closed_ok and bounded and dominated


# -- 4. Flat iteration ---------------------------------------------------------------------

def test_4_flat_iteration(acceptance_report):
    failures, c6 = [], []
    start = time.perf_counter()
    for beta in BETAS:
        inp = dini_inputs(beta)
        for oracle in [RandomOracle(seed) for seed in range(10)] + [AdversarialOracle()]:
            run = flat_run(inp, oracle, 200)
            rep = check_claims(run, tol=1e-6)
            C6, _ = fit_gap_constant(run, inp)
            c6.append(C6)
            if not (rep.all_hold and math.isfinite(C6) and gap_dominated(run, inp, C6)):
                failures.append((beta, oracle, rep))
    elapsed = time.perf_counter() - start
    per_profile = elapsed / len(BETAS)
    ok = not failures and per_profile < 1.0
    acceptance_report(4, "Flat iteration claims", ok,
                      f"11 oracles x {len(BETAS)} profiles, C6 in [{min(c6):.3g}, {max(c6):.3g}], "
                      f"{per_profile:.2f} s per profile")
    assert not failures, failures
    assert per_profile < 1.0


# -- 5. Solver --------------------------------------------------------------------------------

HS = (1 / 32, 1 / 64, 1 / 128)


def disk_errors():
    return [abs(grid.solve(discretize(Disk(), None, 1.0, h)).node_value(0.0, 0.0) - 0.25) for h in HS]


def test_5_solver(acceptance_report):
    start = time.perf_counter()
    errs = disk_errors()
    within = all(e <= h * h for e, h in zip(errs, HS))
    zero = grid.solve(discretize(Disk(), None, 0.0, 1 / 64))
    zero_ok = bool(np.all(zero.u == 0.0) and np.all(zero.grid_values() == 0.0))
    elapsed = time.perf_counter() - start
    checked = sum(1 for rec in SOLVE_LOG if rec[0])
    violations = len(max_principle_violations())
    ratios = [a / b if b > 0 else math.inf for a, b in zip(errs, errs[1:])]
    ratio_ok = all(3 <= r <= 5 for r in ratios)
    ok = within and ratio_ok and zero_ok and violations == 0 and elapsed < 30
    acceptance_report(5, "Solver correctness", ok,
                      f"|u(0)-0.25| = {', '.join(f'{e:.1e}' for e in errs)} (within h^2: {within}); "
                      f"ratios {', '.join(f'{r:.3g}' for r in ratios)} in [3,5]: {ratio_ok} "
                      f"(scheme is exact for this quadratic solution); f=0 gives u=0: {zero_ok}; "
                      f"max principle: {violations} violations in {checked} solves; {elapsed:.1f} s")
    assert within and zero_ok and elapsed < 30
    assert checked > 0 and violations == 0


@pytest.mark.xfail(strict=True, reason="disk Poisson is reproduced to round-off, so error ratios are noise")
def test_5_disk_error_ratio_in_band():
    errs = disk_errors()
    assert all(b > 0 and 3 <= a / b <= 5 for a, b in zip(errs, errs[1:]))


# -- 6. Differentiability dichotomy ------------------------------------------------------------

def test_6_differentiability(acceptance_report):
    start = time.perf_counter()
    cases = {
        "power alpha=0.5": power_cusp_graph(0.5),
        "log q=0.5": log_cusp_graph(0.5),
        "log q=1": log_cusp_graph(1.0),
        "log q=2": log_cusp_graph(2.0),
        "wedge": wedge_graph(),
    }
    reports = {name: probe_quotient(GraphRegion(dom), k_range=(3, 10), cells=256)[0]
               for name, dom in cases.items()}
    elapsed = time.perf_counter() - start
    cusp = reports["power alpha=0.5"]
    finest_h = cusp.t[-1] / 16
    last5 = cusp.growth[-5:]
    blow_ok = cusp.verdict is ProbeVerdict.BLOWUP and bool(np.all(last5 >= 1.2)) and finest_h <= 2.0 ** -14
    diff_ok = all(reports[k].verdict is ProbeVerdict.DIFFERENTIABLE for k in ("log q=2", "wedge"))
    low_q = "; ".join(f"{k}: {reports[k].verdict.value}" for k in ("log q=0.5", "log q=1"))
    ok = blow_ok and diff_ok and elapsed < 600
    acceptance_report(6, "Differentiability dichotomy", ok,
                      f"alpha=0.5 {cusp.verdict.value}, last 5 growth {np.round(last5, 3).tolist()}, "
                      f"finest h {finest_h:.3g}; q=2 {reports['log q=2'].verdict.value}; "
                      f"wedge {reports['wedge'].verdict.value}; reported {low_q}; {elapsed:.0f} s")
    assert blow_ok and diff_ok and elapsed < 600


# -- 7. Sandwich ---------------------------------------------------------------------------------

def test_7_sandwich(acceptance_report):
    res = sandwich_experiment(HalfDisk(), None, 1.0, delta=1 / 16, m_max=3, cells=512)
    rows = [r for r in res.rows if 1 <= r.m <= 3]
    positive = all(r.upper_margin > 0 and r.lower_margin > 0 for r in rows)
    ok = positive and len(rows) == 3 and res.passed
    acceptance_report(7, "Sandwich verification", ok,
                      "; ".join(f"m={r.m} h={r.h:.3g} margins {r.upper_margin:.3g}/{r.lower_margin:.3g}"
                                for r in rows) + f"; branches {''.join(res.branches)}")
    assert ok


# -- 8. Geometry -----------------------------------------------------------------------------------

def test_8_geometry(acceptance_report):
    expected = {
        "wedge": (wedge_graph(), math.pi / 4, 3 * math.pi / 4),
        "parabola": (parabola_graph(), 0.0, math.pi),
        "log-cusp q=1": (log_cusp_graph(1.0), 0.0, math.pi),
        "log-cusp q=2": (log_cusp_graph(2.0), 0.0, math.pi),
    }
    worst, cones_ok = 0.0, True
    for dom, lo, hi in expected.values():
        s = blow_up_cone(dom, (0.0, 0.0))
        worst = max(worst, abs(s.theta_lo - lo), abs(s.theta_hi - hi))
        cones_ok &= cone_check(s)
    family = [Modulus.zero()] + [Modulus.power(c, p) for p in (1.5, 2.0) for c in (0.5, 1.0, 2.0)]
    family += [Modulus.logpower(c, q) for q in (1.5, 2.0) for c in (0.5, 1.0, 2.0)]
    found = [g for g in family if find_support_direction(reflex_graph(), (0.0, 0.0), g) is not None]
    ok = worst <= 1e-4 and cones_ok and not found
    acceptance_report(8, "Geometry", ok,
                      f"max sector error {worst:.1e} rad; cone_check: {cones_ok}; "
                      f"reflex support found for {len(found)} of {len(family)} moduli")
    assert ok
