"""Moduli, local boundary graphs, Dini classification and blow-up cones.

Everything here is two-dimensional: a boundary near a point is the graph
``x2 = nu(x1)`` and the domain lies above it.  Blow-up sets of such domains
are planar sectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError, InconclusiveError, ValidationError

BOUNDARY_TOL = 1e-9
VIOLATION_TOL = 1e-12
FLAT_TOL = 1e-4


# ---------------------------------------------------------------------------
# Moduli
# ---------------------------------------------------------------------------

class ModulusKind(str, Enum):
    ZERO = "zero"
    POWER = "power"
    LOGPOWER = "logpower"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class Modulus:
    """A nondecreasing function ``gamma(r) = r * sigma(r)`` valid on ``(0, R0]``.

    ``scale`` records a rescaling: the modulus evaluates
    ``gamma_base(scale * r) / scale`` where ``gamma_base`` is given by
    ``kind`` and its parameters.  ``exponent`` is ``p`` for POWER and ``q`` for
    LOGPOWER.
    """

    kind: ModulusKind
    c: float = 0.0
    exponent: float = 1.0
    R0: float = 1.0
    table_r: tuple = ()
    table_g: tuple = ()
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ModulusKind(self.kind))
        self.validate()

    # constructors -------------------------------------------------------
    @classmethod
    def zero(cls, R0: float = 1.0) -> "Modulus":
        return cls(ModulusKind.ZERO, R0=R0)

    @classmethod
    def power(cls, c: float, p: float, R0: float = 1.0) -> "Modulus":
        return cls(ModulusKind.POWER, c=c, exponent=p, R0=R0)

    @classmethod
    def logpower(cls, c: float, q: float, R0: float = 1.0) -> "Modulus":
        return cls(ModulusKind.LOGPOWER, c=c, exponent=q, R0=R0)

    @classmethod
    def tabulated(cls, r, g, R0: Optional[float] = None) -> "Modulus":
        r = tuple(float(v) for v in r)
        g = tuple(float(v) for v in g)
        return cls(ModulusKind.TABULATED, table_r=r, table_g=g,
                   R0=r[-1] if R0 is None else R0)

    # validation ---------------------------------------------------------
    def validate(self) -> None:
        if not self.R0 > 0 or not self.scale > 0:
            raise ValidationError("R0 and scale must be positive")
        k = self.kind
        if k in (ModulusKind.POWER, ModulusKind.LOGPOWER):
            if not (self.c > 0 and self.exponent > 0):
                raise ValidationError(f"{k.value} modulus needs c > 0 and exponent > 0")
        if k is ModulusKind.LOGPOWER and self.scale * self.R0 >= math.e:
            raise ValidationError("logpower modulus requires R0 < e")
        if k is ModulusKind.TABULATED:
            r = np.asarray(self.table_r)
            g = np.asarray(self.table_g)
            if r.size < 2 or r.shape != g.shape:
                raise ValidationError("tabulated modulus needs >= 2 matching samples")
            if np.any(r <= 0) or np.any(np.diff(r) <= 0):
                raise ValidationError("tabulated radii must be positive and strictly increasing")
            if np.any(g < 0):
                raise ValidationError("tabulated modulus has negative samples")
            bad = np.nonzero(np.diff(g) < 0)[0]
            if bad.size:
                i = int(bad[0])
                raise ValidationError(
                    f"tabulated modulus is not monotone between r={r[i]:g} and r={r[i + 1]:g}")
            if self.scale * self.R0 > r[-1] * (1 + 1e-12):
                raise ValidationError("R0 exceeds the tabulated range")
        # sampled invariant check: gamma >= 0, nondecreasing, sigma finite
        rs = self.R0 * np.logspace(-12, 0, 97)
        vals = self(rs)
        if np.any(~np.isfinite(vals)) or np.any(vals < 0):
            raise ValidationError("modulus is negative or non-finite on (0, R0]")
        if np.any(np.diff(vals) < -1e-14 * np.maximum(1.0, np.abs(vals[1:]))):
            raise ValidationError("modulus is not nondecreasing on (0, R0]")

    # evaluation ---------------------------------------------------------
    def _base(self, s):
        s = np.asarray(s, dtype=float)
        k = self.kind
        if k is ModulusKind.ZERO:
            return np.zeros_like(s)
        if k is ModulusKind.POWER:
            return self.c * s ** self.exponent
        if k is ModulusKind.LOGPOWER:
            with np.errstate(divide="ignore", invalid="ignore"):
                out = self.c * s / np.log(math.e / s) ** self.exponent
            return np.where(s > 0, out, 0.0)
        r = np.asarray(self.table_r)
        g = np.asarray(self.table_g)
        # below the first sample: chord to the origin (evaluation only; the
        # Dini classifier never uses this part)
        return np.where(s < r[0], g[0] * s / r[0], np.interp(s, r, g))

    def __call__(self, r):
        out = self._base(self.scale * np.asarray(r, dtype=float)) / self.scale
        return out if np.ndim(out) else float(out)

    def sigma(self, r):
        r = np.asarray(r, dtype=float)
        out = np.asarray(self(r)) / r
        return out if np.ndim(out) else float(out)


def rescale_modulus(gamma: Modulus, t: float) -> Modulus:
    """Modulus of the dilated domain ``Omega / t``: ``r -> gamma(t r) / t``."""
    if not t > 0:
        raise DomainError(f"rescaling factor must be positive, got {t}")
    if t > 1:
        raise DomainError(f"rescaling factor must be <= 1, got {t}")
    return Modulus(gamma.kind, c=gamma.c, exponent=gamma.exponent, R0=gamma.R0 / t,
                   table_r=gamma.table_r, table_g=gamma.table_g, scale=gamma.scale * t)


# ---------------------------------------------------------------------------
# Dini classification
# ---------------------------------------------------------------------------

class DiniVerdict(str, Enum):
    CONVERGENT = "Convergent"
    DIVERGENT = "Divergent"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class DiniReport:
    verdict: DiniVerdict
    value: Optional[float]
    error_bound: Optional[float]
    lower_cutoff_used: float

    @property
    def convergent(self) -> bool:
        return self.verdict is DiniVerdict.CONVERGENT


def closed_form_convergent(gamma: Modulus) -> Optional[bool]:
    """Closed-form answer to ``int_0^R0 gamma(r)/r^2 dr < inf`` (None if tabulated)."""
    if gamma.kind is ModulusKind.ZERO:
        return True
    if gamma.kind is ModulusKind.POWER:
        return gamma.exponent > 1
    if gamma.kind is ModulusKind.LOGPOWER:
        return gamma.exponent > 1
    return None


def _analytic_tail(gamma: Modulus, eps: float) -> float:
    """Exact ``int_0^eps gamma(r)/r^2 dr`` for convergent analytic kinds."""
    s = gamma.scale * eps
    if gamma.kind is ModulusKind.ZERO:
        return 0.0
    if gamma.kind is ModulusKind.POWER:
        p = gamma.exponent
        return gamma.c * s ** (p - 1) / (p - 1)
    q = gamma.exponent
    return gamma.c * math.log(math.e / s) ** (1 - q) / (q - 1)


def dini_classify(gamma: Modulus, tol: float = 1e-8, panels: int = 48) -> DiniReport:
    """Classify the Dini integral ``int_0^R0 gamma(r)/r^2 dr``.

    Analytic kinds get their verdict from the closed form; convergent values
    are computed by adaptive quadrature over dyadic panels down to
    ``R0 * 2**-panels`` plus the exact tail below that cutoff.  Tabulated
    moduli integrate the piecewise-linear interpolant exactly between the
    samples; below the first sample the tail is known only when the first
    sample is zero, otherwise the verdict is Inconclusive.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    R0 = gamma.R0
    if gamma.kind is ModulusKind.TABULATED:
        r = np.asarray(gamma.table_r) / gamma.scale
        g = np.asarray(gamma.table_g) / gamma.scale
        keep = r <= R0 * (1 + 1e-12)
        r, g = r[keep], g[keep]
        if r[-1] < R0:
            r = np.append(r, R0)
            g = np.append(g, gamma(R0))
        slope = np.diff(g) / np.diff(r)
        icpt = g[:-1] - slope * r[:-1]
        value = float(np.sum(icpt * (1 / r[:-1] - 1 / r[1:]) + slope * np.log(r[1:] / r[:-1])))
        if g[0] == 0.0:
            return DiniReport(DiniVerdict.CONVERGENT, value, 0.0, float(r[0]))
        return DiniReport(DiniVerdict.INCONCLUSIVE, value, math.inf, float(r[0]))

    cutoff = R0 * 2.0 ** (-panels)
    if not closed_form_convergent(gamma):
        return DiniReport(DiniVerdict.DIVERGENT, None, None, cutoff)
    if gamma.kind is ModulusKind.ZERO:
        return DiniReport(DiniVerdict.CONVERGENT, 0.0, 0.0, cutoff)

    def integrand(r):
        return gamma(r) / (r * r)

    total = 0.0
    err = 0.0
    hi = R0
    for _ in range(panels):
        lo = hi / 2
        val, e = integrate.quad(integrand, lo, hi, epsabs=1e-15, epsrel=1e-13, limit=100)
        total += val
        err += e
        hi = lo
    total += _analytic_tail(gamma, cutoff)
    err += 4 * np.finfo(float).eps * abs(total)
    if err < tol:
        return DiniReport(DiniVerdict.CONVERGENT, total, err, cutoff)
    return DiniReport(DiniVerdict.INCONCLUSIVE, total, err, cutoff)


def sigma_decay_index(gamma: Modulus, threshold: float, k_max: int = 400) -> Optional[int]:
    """Smallest ``K`` with ``sigma(2**-k) < threshold`` for every ``K <= k <= k_max``."""
    ks = np.arange(0, k_max + 1)
    r = np.minimum(2.0 ** (-ks.astype(float)), gamma.R0)
    ok = np.asarray(gamma.sigma(r)) < threshold
    if not ok[-1]:
        return None
    bad = np.nonzero(~ok)[0]
    return 0 if bad.size == 0 else int(bad[-1] + 1)


# ---------------------------------------------------------------------------
# Graph domains and support directions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphDomain:
    """``{(x1, x2): x2 > nu(x1)}`` near the origin, for ``|x1| <= half_width``."""

    nu: Callable
    half_width: float = 1.0
    name: str = "graph"

    def __post_init__(self):
        if abs(float(self.nu(0.0))) > BOUNDARY_TOL:
            raise ValidationError(f"graph {self.name!r} does not pass through the origin")

    def __call__(self, x1):
        out = self.nu(np.asarray(x1, dtype=float))
        return out if np.ndim(out) else float(out)

    def check_continuity(self, modulus: Callable, samples: int = 2001) -> bool:
        """Check ``|nu(x) - nu(y)| <= modulus(|x - y|)`` on neighbouring sample pairs."""
        x = np.linspace(-self.half_width, self.half_width, samples)
        v = np.asarray(self(x))
        gaps = np.abs(np.diff(v))
        return bool(np.all(gaps <= np.asarray(modulus(np.diff(x))) + VIOLATION_TOL))

    def boundary_point(self, x1: float) -> np.ndarray:
        return np.array([x1, self(x1)])

    def phi(self, x, y):
        """Level-set function of ``Q_1`` intersected with the region above the graph."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        hw = self.half_width
        return np.maximum(np.maximum(np.asarray(self(np.clip(x, -hw, hw))) - y,
                                     np.abs(x) - hw), np.abs(y) - 1.0)


@dataclass(frozen=True)
class SupportDirection:
    eta: np.ndarray
    anchor: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        if abs(np.linalg.norm(eta) - 1.0) > 1e-12:
            raise ValidationError("support direction must be a unit vector")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float))

    @classmethod
    def from_angle(cls, phi: float, anchor) -> "SupportDirection":
        return cls(np.array([math.cos(phi), math.sin(phi)]), anchor)


@dataclass(frozen=True)
class SupportCheck:
    ok: bool
    witness: Optional[np.ndarray]
    worst_slack: float

    def __bool__(self):
        return self.ok


def _require_on_boundary(domain: GraphDomain, x0) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if abs(x0[1] - domain(x0[0])) > BOUNDARY_TOL:
        raise DomainError(f"point {x0.tolist()} is not on the boundary graph")
    return x0


def _probe_points(domain: GraphDomain, x0: np.ndarray, R0: float, samples: int) -> np.ndarray:
    """Boundary and interior sample points of the closed domain inside ``B(x0, R0)``."""
    hw = domain.half_width
    dy = 2.0 ** (-np.arange(0, 41, dtype=float))
    xs = np.concatenate([
        np.linspace(-hw, hw, samples),
        x0[0] + hw * dy, x0[0] - hw * dy,
    ])
    xs = np.unique(xs[np.abs(xs) <= hw])
    nu = np.asarray(domain(xs))
    heights = np.concatenate([[0.0], R0 * dy[::2]])
    px = np.repeat(xs, heights.size)
    py = (nu[:, None] + heights[None, :]).ravel()
    ray = np.column_stack([np.full(dy.size, x0[0]), x0[1] + R0 * dy])
    pts = np.vstack([np.column_stack([px, py]), ray])
    d = np.hypot(pts[:, 0] - x0[0], pts[:, 1] - x0[1])
    keep = (d < R0) & (d > 0)
    return pts[keep]


def _slacks(pts: np.ndarray, x0: np.ndarray, gamma: Modulus, etas: np.ndarray) -> np.ndarray:
    """``eta . (x - x0) + gamma(|x - x0|)`` for every eta (rows) and point (columns)."""
    d = pts - x0
    g = np.asarray(gamma(np.hypot(d[:, 0], d[:, 1])))
    return etas @ d.T + g[None, :]


def support_check(domain: GraphDomain, x0, eta: SupportDirection, gamma: Modulus,
                  samples: int = 256) -> SupportCheck:
    """Test ``eta . (x - x0) >= -gamma(|x - x0|)`` on sampled points of the closure.

    A violation reports the failing sample closest to ``x0``.
    """
    if samples < 16:
        raise DomainError("support_check needs at least 16 samples")
    x0 = _require_on_boundary(domain, x0)
    e = eta.eta if isinstance(eta, SupportDirection) else np.asarray(eta, dtype=float)
    pts = _probe_points(domain, x0, gamma.R0, samples)
    s = _slacks(pts, x0, gamma, e[None, :])[0]
    worst = float(s.min()) if s.size else 0.0
    bad = s < -VIOLATION_TOL
    if not bad.any():
        return SupportCheck(True, None, worst)
    cand = pts[bad]
    i = int(np.argmin(np.hypot(cand[:, 0] - x0[0], cand[:, 1] - x0[1])))
    return SupportCheck(False, cand[i], worst)


def find_support_direction(domain: GraphDomain, x0, gamma: Modulus, n_angles: int = 1024,
                           bisection_steps: int = 40, samples: int = 256
                           ) -> Optional[SupportDirection]:
    """Search the unit circle for a direction passing :func:`support_check`.

    A uniform sweep locates the feasible arc with the best worst-case slack;
    its two ends are refined by bisection and the mid-angle is returned.  When
    no sweep angle passes, the best angle is refined by a bracketing search
    before giving up.
    """
    x0 = _require_on_boundary(domain, x0)
    pts = _probe_points(domain, x0, gamma.R0, samples)

    def worst(phis):
        phis = np.atleast_1d(phis)
        out = np.empty(phis.size)
        for i in range(0, phis.size, 128):
            p = phis[i:i + 128]
            etas = np.column_stack([np.cos(p), np.sin(p)])
            out[i:i + 128] = _slacks(pts, x0, gamma, etas).min(axis=1)
        return out

    def passes(phi):
        return worst(phi)[0] >= -VIOLATION_TOL

    step = 2 * math.pi / n_angles
    phis = step * np.arange(n_angles)
    w = worst(phis)
    ok = w >= -VIOLATION_TOL
    best = int(np.argmax(w))

    if not ok.any():
        lo, hi = phis[best] - step, phis[best] + step
        for _ in range(bisection_steps):
            m1 = lo + (hi - lo) / 3
            m2 = hi - (hi - lo) / 3
            if worst(m1)[0] < worst(m2)[0]:
                lo = m1
            else:
                hi = m2
        phi = 0.5 * (lo + hi)
        if passes(phi):
            return SupportDirection.from_angle(phi, x0)
        return None

    if ok.all():
        return SupportDirection.from_angle(phis[best], x0)
    # walk to the ends of the passing run containing the best angle
    i_lo = best
    while ok[(i_lo - 1) % n_angles]:
        i_lo -= 1
    i_hi = best
    while ok[(i_hi + 1) % n_angles]:
        i_hi += 1

    def refine(inside, outside):
        for _ in range(bisection_steps):
            mid = 0.5 * (inside + outside)
            if passes(mid):
                inside = mid
            else:
                outside = mid
        return inside

    a = refine(phis[0] + i_lo * step, phis[0] + (i_lo - 1) * step)
    b = refine(phis[0] + i_hi * step, phis[0] + (i_hi + 1) * step)
    phi = 0.5 * (a + b)
    if not passes(phi):
        phi = phis[best]
    return SupportDirection.from_angle(phi % (2 * math.pi), x0)


# ---------------------------------------------------------------------------
# Blow-up cones
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConeSector:
    """Closed planar sector ``theta_lo <= arg(x) <= theta_hi`` about the origin."""

    theta_lo: float
    theta_hi: float
    residual: float = 0.0

    def __post_init__(self):
        w = self.theta_hi - self.theta_lo
        if not (0 <= w <= 2 * math.pi + 1e-12):
            raise ValidationError(f"sector width {w} outside [0, 2*pi]")

    @property
    def width(self) -> float:
        return self.theta_hi - self.theta_lo

    def contains(self, pts, atol: float = 1e-9) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        ang = np.arctan2(pts[:, 1], pts[:, 0])
        rel = np.mod(ang - self.theta_lo, 2 * math.pi)
        inside = rel <= self.width + atol
        # a point just clockwise of theta_lo wraps to ~2*pi
        inside |= rel >= 2 * math.pi - atol
        return inside | (np.hypot(pts[:, 0], pts[:, 1]) == 0)


class PointClass(str, Enum):
    CORNER = "Corner"
    FLAT = "Flat"


def default_scales(x0_1: float = 0.0) -> np.ndarray:
    """Dyadic scales from 1/16 down to the float resolution around ``x0_1``."""
    floor = 1e-300 if x0_1 == 0 else 1e-7 * max(1.0, abs(x0_1))
    k_max = int(math.floor(-math.log2(floor)))
    return 2.0 ** (-np.arange(4, k_max + 1, dtype=float))


def _extrapolate_slope(t: np.ndarray, s: np.ndarray, degree: int = 3):
    """Limit of ``s`` as ``t -> 0`` with corrections polynomial in ``1/ln(1/t)``.

    Power-law corrections have died out on the deep half of a long dyadic
    sequence; logarithmic ones are captured by the polynomial.  Returns the
    limit and a residual combining the fit misfit with the drift between the
    deep half and the deepest quarter.
    """
    n = t.size
    if n < 2 * (degree + 2):
        raise InconclusiveError("too few scales to extrapolate the slope")

    def fit(ts, ss):
        u = 1.0 / np.log(1.0 / ts)
        V = np.vander(u / u.max(), degree + 1, increasing=True)
        coef, *_ = np.linalg.lstsq(V, ss, rcond=None)
        mis = float(np.max(np.abs(V @ coef - ss))) if ss.size else 0.0
        return float(coef[0]), mis

    half = slice(n // 2, n)
    quarter = slice(3 * n // 4, n)
    a_half, mis_half = fit(t[half], s[half])
    a_q, _ = fit(t[quarter], s[quarter])
    return a_half, mis_half + abs(a_half - a_q)


def blow_up_cone(domain: GraphDomain, x0, scales: Optional[Sequence[float]] = None,
                 residual_tol: float = 1e-6) -> ConeSector:
    """Sector spanned by the one-sided limits of the boundary slopes at ``x0``."""
    x0 = _require_on_boundary(domain, x0)
    t = default_scales(x0[0]) if scales is None else np.asarray(scales, dtype=float)
    if np.any(np.diff(t) >= 0) or t[-1] >= 1e-6 or t[0] >= 1:
        raise DomainError("scales must decrease strictly from below 1 to below 1e-6")
    right = (np.asarray(domain(x0[0] + t)) - x0[1]) / t
    left = (np.asarray(domain(x0[0] - t)) - x0[1]) / t
    s_r, res_r = _extrapolate_slope(t, right)
    s_l, res_l = _extrapolate_slope(t, left)
    res = max(res_r, res_l)
    if not np.isfinite(res) or res > residual_tol:
        raise InconclusiveError(f"boundary slopes do not converge (residual {res:.3g})", res)
    return ConeSector(math.atan(s_r), math.pi - math.atan(s_l), residual=res)


def classify_point(domain: GraphDomain, x0=(0.0, 0.0), scales=None,
                   angle_tol: float = FLAT_TOL) -> PointClass:
    """Flat when the blow-up sector is a half-plane, Corner otherwise."""
    sector = blow_up_cone(domain, x0, scales)
    return PointClass.FLAT if abs(sector.width - math.pi) <= angle_tol else PointClass.CORNER


def cone_check(sector: ConeSector, probes: int = 100, seed: int = 0) -> bool:
    """Probe the two cone axioms (dilation and additivity) on random sector points."""
    if probes < 100:
        raise DomainError("cone_check needs at least 100 probes")
    rng = np.random.default_rng(seed)
    ang = sector.theta_lo + sector.width * rng.random(probes)
    ang = np.concatenate([ang, [sector.theta_lo, sector.theta_hi]])
    rad = np.exp(rng.uniform(-3, 3, ang.size))
    x = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    for t in (0.5, 2.0):
        if not sector.contains(t * x).all():
            return False
    perm = rng.permutation(x.shape[0])
    pair_sums = [x + x[perm], x[:, None, :] + x[None, -2:, :]]
    sums = np.vstack([pair_sums[0], pair_sums[1].reshape(-1, 2)])
    return bool(sector.contains(sums).all())


# ---------------------------------------------------------------------------
# Local lower graph (1.4)
# ---------------------------------------------------------------------------

def localization_radius(gamma: Modulus, n_scan: int = 200) -> float:
    """Radius below which ``sigma < 1/sqrt(2)``, so points of the closure obey ``x2 > -|x1|``."""
    limit = 1 / math.sqrt(2)
    r = gamma.R0 * 2.0 ** (-np.arange(n_scan, dtype=float))
    ok = np.asarray(gamma.sigma(r)) < limit
    if ok.all():
        return float(gamma.R0)
    if not ok[-1]:
        raise DomainError("sigma does not fall below 1/sqrt(2); modulus is not Dini-like")
    last_bad = int(np.nonzero(~ok)[0][-1])
    lo, hi = r[last_bad + 1], r[last_bad]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if all(np.asarray(gamma.sigma(np.linspace(lo, mid, 33))) < limit):
            lo = mid
        else:
            hi = mid
    return float(lo)


@dataclass(frozen=True)
class LocalizationReport:
    r0: float
    ok: bool
    worst_slack: float
    samples: int


def check_localization(domain: GraphDomain, gamma: Modulus, samples: int = 512) -> LocalizationReport:
    """Verify ``x2 >= -gamma(2|x1|)`` on the closure inside ``B_{r0}``, with ``r0`` chosen here."""
    r0 = localization_radius(gamma)
    pts = _probe_points(domain, np.zeros(2), r0, samples)
    slack = pts[:, 1] + np.asarray(gamma(np.minimum(2 * np.abs(pts[:, 0]), gamma.R0)))
    # 2|x1| may exceed R0 only when r0 > R0/2; gamma is then capped at its R0 value
    worst = float(slack.min()) if slack.size else 0.0
    return LocalizationReport(r0, worst >= -VIOLATION_TOL, worst, int(pts.shape[0]))


# ---------------------------------------------------------------------------
# Standard boundary graphs
# ---------------------------------------------------------------------------

def _safe_log_ratio(x):
    """``ln(e/|x|)`` with the value at ``x = 0`` taken as ``inf``."""
    ax = np.abs(np.asarray(x, dtype=float))
    with np.errstate(divide="ignore"):
        return np.log(math.e / ax)


def flat_graph() -> GraphDomain:
    return GraphDomain(lambda x: 0.0 * np.asarray(x, dtype=float), name="flat")


def wedge_graph() -> GraphDomain:
    """Convex right-angle corner ``x2 > |x1|``."""
    return GraphDomain(lambda x: np.abs(np.asarray(x, dtype=float)), name="wedge")


def parabola_graph() -> GraphDomain:
    return GraphDomain(lambda x: np.asarray(x, dtype=float) ** 2, name="parabola")


def reflex_graph() -> GraphDomain:
    """Reflex corner ``x2 > -|x1|``."""
    return GraphDomain(lambda x: -np.abs(np.asarray(x, dtype=float)), name="reflex")


def power_cusp_graph(alpha: float) -> GraphDomain:
    """``x2 > -|x1|^alpha``: an exterior cusp for ``alpha < 1``."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    return GraphDomain(lambda x: -np.abs(np.asarray(x, dtype=float)) ** alpha, name=f"power-cusp({alpha:g})")


def log_cusp_graph(q: float, sign: float = -1.0) -> GraphDomain:
    """``x2 > sign * |x1| / ln(e/|x1|)^q``; flat at the origin for every ``q > 0``."""
    if not q > 0:
        raise DomainError("q must be positive")

    def nu(x):
        ax = np.abs(np.asarray(x, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = sign * ax / _safe_log_ratio(ax) ** q
        return np.where(ax > 0, out, 0.0)

    return GraphDomain(nu, name=f"log-cusp({q:g})")
