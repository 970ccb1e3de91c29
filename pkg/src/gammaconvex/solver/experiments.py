"""Boundary difference-quotient probes, the two-sided slab check and the cusp table."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from ..barriers import default_constants
from ..errors import DomainError
from ..geometry import (DiniVerdict, GraphDomain, Modulus, dini_classify, log_cusp_graph,
                        power_cusp_graph, wedge_graph)
from ..iteration import (BRANCH_A, BRANCH_B, FlatState, IterationInputs, Profile, flat_step)
from .cascade import cascade_value, finest_level, halving_windows, solve_cascade
from .grid import SolutionField
from .regions import GraphRegion, HalfDisk, as_region

BLOWUP_GROWTH = 1.2
BLOWUP_RUN = 5
AITKEN_AGREEMENT = 0.02


# ---------------------------------------------------------------------------
# Difference-quotient probe
# ---------------------------------------------------------------------------

class ProbeVerdict(str, Enum):
    DIFFERENTIABLE = "Differentiable"
    BLOWUP = "BlowUp"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class ProbeReport:
    ks: tuple
    t: tuple
    q: tuple
    verdict: ProbeVerdict
    a: Optional[float]
    residual: float

    @property
    def growth(self) -> np.ndarray:
        q = np.asarray(self.q)
        return q[1:] / q[:-1]

    def rows(self):
        return [(k, t, q, self.verdict.value) for k, t, q in zip(self.ks, self.t, self.q)]


def aitken(q: Sequence[float]) -> np.ndarray:
    """Aitken delta-squared estimates ``A_k`` from ``q_k, q_{k+1}, q_{k+2}``."""
    q = np.asarray(q, dtype=float)
    d = np.diff(q)
    out = []
    for i in range(len(q) - 2):
        den = d[i + 1] - d[i]
        out.append(q[i + 2] if den == 0 else q[i + 2] - d[i + 1] ** 2 / den)
    return np.array(out)


def classify_quotients(q: Sequence[float]):
    """Verdict, limit estimate and residual for a sequence of quotients.

    BlowUp: at least five consecutive ratios ``q_{k+1}/q_k >= 1.2``.
    Differentiable: ``|q_{k+1} - q_k|`` strictly decreasing and the last two
    Aitken estimates agreeing within 2% of ``max(|a|, max|q|)``.
    """
    q = np.asarray(q, dtype=float)
    if q.size < 4:
        raise DomainError("need at least four quotients")
    ratios = q[1:] / np.where(q[:-1] == 0, np.nan, q[:-1])
    run = best = 0
    for r in ratios:
        run = run + 1 if (np.isfinite(r) and r >= BLOWUP_GROWTH) else 0
        best = max(best, run)
    if best >= BLOWUP_RUN:
        return ProbeVerdict.BLOWUP, None, float("nan")
    d = np.abs(np.diff(q))
    A = aitken(q)
    a = float(A[-1])
    resid = float(abs(A[-1] - A[-2]))
    scale = max(abs(a), float(np.max(np.abs(q))))
    if np.all(np.diff(d) < 0) and resid <= AITKEN_AGREEMENT * scale:
        return ProbeVerdict.DIFFERENTIABLE, a, resid
    return ProbeVerdict.INCONCLUSIVE, None, resid


def probe_quotient(region, coeffs=None, f=1.0, x0=(0.0, 0.0), l=(0.0, 1.0),
                   k_range=(3, 10), cells: int = 256, window_factor: float = 8.0,
                   tol: float = 1e-10, levels=None):
    """Quotients ``q_k = u(x0 + t_k l)/t_k`` for ``t_k = 2^-k`` on a zoom cascade.

    Level ``k`` solves on a window of half-width ``window_factor * t_k``
    around ``x0``, so its spacing is ``2 window_factor t_k / cells``
    (``t_k/16`` with the defaults).  Returns ``(report, levels)``.
    """
    region = as_region(region)
    x0 = np.asarray(x0, dtype=float)
    l = np.asarray(l, dtype=float)
    if abs(np.linalg.norm(l) - 1) > 1e-12:
        raise DomainError("probe direction must be a unit vector")
    k0, k1 = k_range
    ks = list(range(k0, k1 + 1))
    ts = [2.0 ** -k for k in ks]
    pts = np.array([x0 + t * l for t in ts])
    if not np.all(region.contains(pts[:, 0], pts[:, 1])):
        raise DomainError("probe points leave the domain")
    if levels is None:
        top = window_factor * ts[0]
        if top > 1:
            raise DomainError("window_factor * t_kmin must not exceed 1")
        halves = halving_windows(1.0, window_factor * ts[-1])
        levels = solve_cascade(region, coeffs, f, tuple(x0), halves, cells, tol)
    q = []
    for t, p in zip(ts, pts):
        lev = finest_level(levels, p[0], p[1])
        q.append(float(lev.interpolate(np.array([p[0]]), np.array([p[1]]))[0]) / t)
    verdict, a, resid = classify_quotients(q)
    return ProbeReport(tuple(ks), tuple(ts), tuple(q), verdict, a, resid), levels


# ---------------------------------------------------------------------------
# Two-sided slab bounds along the flat recurrence
# ---------------------------------------------------------------------------

class CoupledOracle:
    """Branch A when ``u(delta^(m+1) e2) >= (K + k) delta^(m+1) / 2``."""

    def __init__(self, u_at, delta: float):
        self.u_at = u_at
        self.delta = delta

    def __call__(self, m, state, inputs):
        r = self.delta ** (m + 1)
        return BRANCH_A if self.u_at(0.0, r) >= 0.5 * (state.K + state.k) * r else BRANCH_B


@dataclass(frozen=True)
class SandwichRow:
    m: int
    h: float
    nodes: int
    upper_margin: float
    lower_margin: float
    slack: float
    upper_argmin: tuple
    lower_argmin: tuple

    @property
    def passed(self) -> bool:
        return self.upper_margin >= -self.slack and self.lower_margin >= -self.slack


def _box_level(levels, r: float):
    """Finest level whose window contains ``[-r, r]^2``."""
    cands = [lev for lev in levels
             if lev.window.half >= r * (1 - 1e-12) and abs(lev.window.cx) + r <= lev.window.half * (1 + 1e-12)
             and abs(lev.window.cy) + r <= lev.window.half * (1 + 1e-12)]
    if not cands:
        raise DomainError(f"no zoom level covers the slab of radius {r:g}")
    return min(cands, key=lambda lev: lev.window.h)


def sandwich_check(levels: Sequence[SolutionField], states: Sequence[FlatState], delta: float,
                   m_max: int, scale: float = 1.0, C: float = 1.0):
    """Check ``k_m x2 - b_m <= u/scale <= K_m x2 + B_m`` on grid nodes of each slab.

    Margins are reported divided by ``delta^m`` and pass when above
    ``-C h / delta^m``.
    """
    if len(states) <= m_max:
        raise DomainError("not enough iteration states for m_max")
    rows = []
    for m in range(m_max + 1):
        r = delta ** m
        lev = _box_level(levels, r)
        if r < 8 * lev.h:
            raise DomainError(f"slab radius delta^{m} = {r:g} is below 8h = {8 * lev.h:g}")
        X, Y = lev.problem.node_coords()
        U = lev.grid_values() / scale
        sel = lev.problem.inside & (np.abs(X) < r) & (np.abs(Y) < r)
        x, y, u = X[sel], Y[sel], U[sel]
        s = states[m]
        up = (s.K * y + s.beta_B * r - u) / r
        lo = (u - (s.k * y - s.beta_b * r)) / r
        iu, il = int(np.argmin(up)), int(np.argmin(lo))
        rows.append(SandwichRow(m, lev.h, int(sel.sum()), float(up[iu]), float(lo[il]), C * lev.h / r,
                                (float(x[iu]), float(y[iu])), (float(x[il]), float(y[il]))))
    return rows


def corrupted(field: SolutionField, x: float, y: float, amount: float) -> SolutionField:
    """Copy of ``field`` with ``amount`` added at the unknown nearest to ``(x, y)``."""
    P = field.problem
    X, Y = P.node_coords()
    d = np.where(P.unknown, (X - x) ** 2 + (Y - y) ** 2, np.inf)
    i, j = np.unravel_index(int(np.argmin(d)), d.shape)
    if not np.isfinite(d[i, j]):
        raise DomainError("field has no unknowns to corrupt")
    u = field.u.copy()
    u[P.index[i, j]] += amount
    return SolutionField(P, u, field.residual)


def l2_norm_on_slab(region, f, r: float, samples: int = 256) -> float:
    """Midpoint-rule ``||f||_{L^2}`` over the region inside ``[-r, r]^2``."""
    region = as_region(region)
    c = (np.arange(samples) + 0.5) / samples * 2 * r - r
    X, Y = np.meshgrid(c, c, indexing="ij")
    fv = f(X, Y) if callable(f) else np.full(X.shape, float(f))
    ins = region.contains(X, Y)
    return float(math.sqrt(np.sum(np.where(ins, fv ** 2, 0.0)) * (2 * r / samples) ** 2))


@dataclass
class SandwichResult:
    rows: list
    states: list
    scale: float
    levels: list
    inputs: IterationInputs

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def branches(self) -> tuple:
        return self.states[-1].branch_history


def sandwich_experiment(region=None, coeffs=None, f=1.0, delta: float = 1 / 16, m_max: int = 3,
                        cells: int = 512, sigma: Optional[Profile] = None, D: Optional[Profile] = None,
                        C: float = 1.0, tol: float = 1e-10, n: int = 2, lam: float = 1.0,
                        perturb=None) -> SandwichResult:
    """Normalize a solution, run the flat recurrence with the coupled oracle and check the slabs.

    ``perturb(levels, scale)`` may replace the levels after the oracle ran
    and before the slabs are checked (used to plant faults).
    """
    region = as_region(region if region is not None else HalfDisk())
    halves = halving_windows(1.0, delta ** m_max)
    levels = solve_cascade(region, coeffs, f, (0.0, 0.0), halves, cells, tol)
    base = levels[0]
    fnorm = l2_norm_on_slab(region, f, 1.0)
    scale = max(float(base.grid_values().max()), fnorm)
    if scale <= 0:
        raise DomainError("trivial solution cannot be normalized")

    fvals = [l2_norm_on_slab(region, f, delta ** m) / scale for m in range(m_max + 2)]

    def f_steps(m):
        if m < len(fvals):
            return fvals[m]
        return fvals[-1] * delta ** (m - len(fvals) + 1)

    consts = default_constants(n, lam)
    inputs = IterationInputs(delta=delta, mu=0.5, M=consts.M, A1=4.0, A2=2 * consts.M + 1,
                             f=Profile.from_steps(f_steps, delta, "f-norm"),
                             sigma=sigma or Profile.zero(), D=D)

    def u_at(x, y):
        return cascade_value(levels, x, y) / scale

    oracle = CoupledOracle(u_at, delta)
    states = [FlatState.initial(delta)]
    for m in range(m_max):
        s = states[-1]
        states.append(flat_step(s, oracle(m, s, inputs), inputs))
    if perturb is not None:
        levels = perturb(levels, scale)
    rows = sandwich_check(levels, states, delta, m_max, scale, C)
    return SandwichResult(rows, states, scale, levels, inputs)


# ---------------------------------------------------------------------------
# Cusp sharpness table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SharpnessRow:
    family: str
    parameter: float
    dini: DiniVerdict
    dini_value: Optional[float]
    probe: ProbeVerdict
    a: Optional[float]
    min_growth: float
    max_growth: float
    note: str

    @property
    def consistent(self) -> bool:
        """Dini-convergent rows must not blow up; strong power cusps must."""
        if self.dini is DiniVerdict.CONVERGENT and self.probe is ProbeVerdict.BLOWUP:
            return False
        if self.family == "power" and self.parameter <= 0.5 and self.probe is not ProbeVerdict.BLOWUP:
            return False
        return True


EXTERIOR_NOTE = ("complement contains {x2 < nu(x1)} near 0; the support inequality with "
                 "eta = e2 holds with gamma = r^alpha (power) or r/ln^q(e/r) (log), c = 1")


def sharpness_experiment(alpha_grid=(0.5, 0.75, 1.0), q_grid=(0.5, 1.0, 1.5, 2.0), wedge: bool = True,
                         k_range=(3, 10), cells: int = 256, tol: float = 1e-10, threads: int = 1):
    """Dini verdict against probe verdict for power and logarithmic cusps (``f = 1``).

    Probes are independent and may run on ``threads`` workers; row order is fixed.
    """
    cases = []
    for a in alpha_grid:
        if not (0 < a <= 1):
            raise DomainError("alpha grid must lie in (0, 1]")
        cases.append(("power", float(a), power_cusp_graph(a), Modulus.power(1.0, a)))
    for q in q_grid:
        if not q > 0:
            raise DomainError("q grid must be positive")
        cases.append(("log", float(q), log_cusp_graph(q), Modulus.logpower(1.0, q)))
    if wedge:
        cases.append(("wedge", 0.0, wedge_graph(), Modulus.zero()))
    def one(case):
        fam, p, dom, gamma = case
        rep = dini_classify(gamma)
        probe, _ = probe_quotient(GraphRegion(dom), None, 1.0, (0.0, 0.0), (0.0, 1.0), k_range, cells, tol=tol)
        g = probe.growth
        note = "convex, gamma = 0" if fam == "wedge" else EXTERIOR_NOTE
        return SharpnessRow(fam, p, rep.verdict, rep.value, probe.verdict, probe.a,
                            float(g.min()), float(g.max()), note)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, cases))
    return [one(c) for c in cases]
