"""Explicit barrier pair on the slab ``Q[M delta, delta]`` and its certification.

``Psi`` is a supersolution-type barrier that is at least 1 on the top and
lateral faces; ``Psi_tilde`` is the matching subsolution-type barrier.  Both
are quadratic in ``x_n`` and grow like ``((|x_i|/delta - 1)^+)^(2+eps)`` in the
tangential directions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, ValidationError
from .geometry import Modulus

SLACK_TOL = 1e-12
KINK_BAND = 1e-4


def epsilon_condition(eps: float, M: float) -> float:
    """Left-hand side ``4 - (1+eps)(2+eps)(M-1)^eps``; feasible when nonnegative."""
    return 4.0 - (1.0 + eps) * (2.0 + eps) * (M - 1.0) ** eps


def choose_epsilon(M: float, grid: int = 1000) -> float:
    """Largest ``eps`` in ``(0, 1]`` with ``epsilon_condition(eps, M) >= 0``.

    A grid scan brackets the last sign change, which is then bisected down to
    adjacent floating-point numbers; the feasible endpoint is returned.
    """
    if not M > 1:
        raise DomainError(f"M must exceed 1, got {M}")
    if epsilon_condition(1.0, M) >= 0:
        return 1.0
    eps = np.linspace(0.0, 1.0, grid + 1)[1:]
    F = np.array([epsilon_condition(e, M) for e in eps])
    feas = np.nonzero(F >= 0)[0]
    if feas.size == 0:
        lo, hi = 0.0, float(eps[0])
    else:
        lo, hi = float(eps[feas[-1]]), float(eps[feas[-1] + 1])
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if epsilon_condition(mid, M) >= 0:
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise DomainError(f"no positive epsilon satisfies the condition for M={M}")
    return lo


@dataclass(frozen=True)
class PaperConstants:
    n: int
    lam: float
    M1: float
    M: float
    delta1: float
    delta: float
    C_small: float


def default_constants(n: int, lam: float) -> PaperConstants:
    if n < 2 or not (0 < lam <= 1):
        raise DomainError("need n >= 2 and lambda in (0, 1]")
    r = math.sqrt(n - 1)
    M1 = 2 * r * (1 + 2 * r / lam)
    delta1 = 1 / (2 * M1)
    return PaperConstants(n=n, lam=lam, M1=M1, M=4 * M1, delta1=delta1,
                          delta=delta1 / (2 * M1),
                          C_small=1 / (32 * (n - 1) * (1 + 2 * r / lam) ** 2))


def min_M(n: int, lam: float) -> float:
    r = math.sqrt(n - 1)
    return r * (1 + 4 * r / lam)


@dataclass(frozen=True)
class BarrierParams:
    """Parameters ``(n, lambda, M, delta, epsilon, g)`` with ``g = gamma(2 M delta)``.

    ``strict=False`` skips validation so that deliberately broken parameter
    sets can be certified (and seen to fail).
    """

    n: int
    lam: float
    M: float
    delta: float
    epsilon: float
    g: float = 0.0
    strict: bool = True

    def __post_init__(self):
        if self.strict:
            self.validate()

    def violations(self) -> list:
        out = []
        if self.n < 2:
            out.append("n must be >= 2")
        if not (0 < self.lam <= 1):
            out.append("lambda must lie in (0, 1]")
        if self.M < min_M(self.n, self.lam) * (1 - 1e-14):
            out.append(f"M={self.M:g} below the lower bound {min_M(self.n, self.lam):g}")
        if not self.delta > 0:
            out.append("delta must be positive")
        if not self.M * self.delta < 0.5:
            out.append("M*delta must be < 1/2")
        if not (0 <= self.g < self.delta):
            out.append("g must satisfy 0 <= g < delta")
        if not self.epsilon > 0:
            out.append("epsilon must be positive")
        elif self.M > 1 and epsilon_condition(self.epsilon, self.M) < -1e-14:
            out.append(f"epsilon={self.epsilon:g} violates the feasibility condition")
        return out

    def validate(self) -> None:
        bad = self.violations()
        if bad:
            raise ValidationError("; ".join(bad))

    @property
    def lateral_coef(self) -> float:
        return self.lam ** 2 / (8 * (self.n - 1))


def make_params(n: int, lam: float, gamma: Optional[Modulus] = None, M: Optional[float] = None,
                delta: Optional[float] = None, epsilon: Optional[float] = None,
                strict: bool = True) -> BarrierParams:
    """Parameters built from the default constants, overridable field by field."""
    c = default_constants(n, lam)
    M = c.M if M is None else M
    delta = c.delta if delta is None else delta
    eps = choose_epsilon(M) if epsilon is None else epsilon
    g = 0.0 if gamma is None else float(gamma(min(2 * M * delta, gamma.R0)))
    return BarrierParams(n, lam, M, delta, eps, g, strict=strict)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _split(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n:
        raise DomainError(f"points must have last dimension {n}")
    return x[..., :-1], x[..., -1]


def _lateral(p: BarrierParams, xp):
    """``(|x_i|/delta - 1)^+`` for the tangential coordinates."""
    return np.maximum(np.abs(xp) / p.delta - 1.0, 0.0)


def eval_barriers(params: BarrierParams, x):
    """Return ``(Psi(x), Psi_tilde(x))``; ``x`` may be a stack of points."""
    xp, xn = _split(x, params.n)
    d = params.delta
    s = (xn + params.g) / (2 * d)
    lat = np.sum(_lateral(params, xp) ** (2 + params.epsilon), axis=-1)
    c = params.lateral_coef
    psi = 4 * s - s * s + c * lat
    psit = 0.5 * (s + s * s) - 0.5 * c * lat
    return psi, psit


def barrier_gradients(params: BarrierParams, x):
    xp, xn = _split(x, params.n)
    d, e, c = params.delta, params.epsilon, params.lateral_coef
    s = (xn + params.g) / (2 * d)
    q = _lateral(params, xp)
    gl = c * (2 + e) * q ** (1 + e) * np.sign(xp) / d
    gpsi = np.concatenate([gl, (2 / d - s / d)[..., None]], axis=-1)
    gpsit = np.concatenate([-0.5 * gl, ((0.5 + s) / (2 * d))[..., None]], axis=-1)
    return gpsi, gpsit


def barrier_hessian(params: BarrierParams, x):
    """Analytic Hessians ``(H_psi, H_psi_tilde)``, both diagonal, shape ``(..., n, n)``."""
    xp, xn = _split(x, params.n)
    d, e, c = params.delta, params.epsilon, params.lateral_coef
    q = _lateral(params, xp)
    lat = c * (2 + e) * (1 + e) * q ** e / d ** 2
    shape = xn.shape + (params.n, params.n)
    H = np.zeros(shape)
    Ht = np.zeros(shape)
    idx = np.arange(params.n - 1)
    H[..., idx, idx] = lat
    Ht[..., idx, idx] = -0.5 * lat
    H[..., -1, -1] = -1 / (2 * d ** 2)
    Ht[..., -1, -1] = 1 / (4 * d ** 2)
    return H, Ht


def hessian_fd_error(params: BarrierParams, points, h: float = 1e-5) -> float:
    """Max Hessian error of central differences of the analytic gradient.

    The step is ``h * delta`` and errors are relative to the largest Hessian
    entry at each point.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    step = h * params.delta
    H, Ht = barrier_hessian(params, pts)
    worst = 0.0
    for j in range(params.n):
        e = np.zeros(params.n)
        e[j] = step
        gp, gpt = barrier_gradients(params, pts + e)
        gm, gmt = barrier_gradients(params, pts - e)
        for fd, exact in (((gp - gm) / (2 * step), H[:, :, j]),
                          ((gpt - gmt) / (2 * step), Ht[:, :, j])):
            scale = np.max(np.abs(exact.reshape(len(pts), -1)), axis=1)
            scale = np.maximum(scale, np.max(np.abs(H.reshape(len(pts), -1)), axis=1))
            err = np.max(np.abs(fd - exact), axis=1) / scale
            worst = max(worst, float(err.max()))
    return worst


def away_from_kinks(params: BarrierParams, points, band: float = KINK_BAND):
    """Mask of points whose tangential coordinates avoid ``| |x_i|/delta - 1 | < band``."""
    xp, _ = _split(points, params.n)
    return np.all(np.abs(np.abs(xp) / params.delta - 1.0) >= band, axis=-1)


# ---------------------------------------------------------------------------
# Operator bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EllipticCoefficients:
    """Symmetric 2D coefficient field ``a11, a12, a22`` with ellipticity ``lam``."""

    a11: Callable
    a12: Callable
    a22: Callable
    lam: float

    @classmethod
    def constant(cls, A, lam: float) -> "EllipticCoefficients":
        A = np.asarray(A, dtype=float)
        if A.shape != (2, 2) or abs(A[0, 1] - A[1, 0]) > 1e-14:
            raise ValidationError("constant coefficients must be a symmetric 2x2 matrix")
        return cls(lambda x, y, v=A[0, 0]: np.full(np.shape(x), v),
                   lambda x, y, v=A[0, 1]: np.full(np.shape(x), v),
                   lambda x, y, v=A[1, 1]: np.full(np.shape(x), v), lam)

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (np.broadcast_to(self.a11(x, y), x.shape), np.broadcast_to(self.a12(x, y), x.shape),
                np.broadcast_to(self.a22(x, y), x.shape))

    def check(self, x, y, tol: float = 1e-12) -> None:
        """Raise unless ``lam I <= A <= I/lam`` at every given point."""
        a11, a12, a22 = self.evaluate(x, y)
        tr = a11 + a22
        disc = np.sqrt(np.maximum(0.25 * (a11 - a22) ** 2 + a12 ** 2, 0.0))
        lo = 0.5 * tr - disc
        hi = 0.5 * tr + disc
        bad = (lo < self.lam - tol) | (hi > 1 / self.lam + tol) | ~np.isfinite(tr)
        if np.any(bad):
            i = np.flatnonzero(bad)[0]
            xi, yi = np.ravel(np.broadcast_to(x, bad.shape))[i], np.ravel(np.broadcast_to(y, bad.shape))[i]
            raise ValidationError(
                f"coefficients not elliptic with lambda={self.lam:g} at ({xi:g}, {yi:g})")


def worst_case_operator(params: BarrierParams, x):
    """Pointwise extremes of ``-a^{ij} D_ij`` over admissible diagonal coefficients.

    Returns ``(min for Psi, max for Psi_tilde)``; only the diagonal of ``A``
    matters because both Hessians are diagonal.
    """
    H, Ht = barrier_hessian(params, x)
    lam = params.lam
    lat = np.diagonal(H, axis1=-2, axis2=-1)[..., :-1].sum(axis=-1)
    latt = np.diagonal(Ht, axis1=-2, axis2=-1)[..., :-1].sum(axis=-1)
    lower = -lam * H[..., -1, -1] - lat / lam
    upper = -lam * Ht[..., -1, -1] - latt / lam
    return lower, upper


def operator_bound(params: BarrierParams, coeffs: Optional[EllipticCoefficients] = None,
                   grid: int = 50):
    """``(psi_lower, psi_tilde_upper)`` for the barrier operator inequalities.

    Without coefficients the closed-form worst case of the diagonal model
    (``a^nn = lam``, ``sum a^ii = (n-1)/lam``, tangential excess ``M - 1``)
    is returned.  With a 2D coefficient field, the minimum of
    ``-a^{ij} D_ij Psi`` and maximum of ``-a^{ij} D_ij Psi_tilde`` over a
    ``grid x grid`` sample of the slab are returned.
    """
    d, e, lam, n = params.delta, params.epsilon, params.lam, params.n
    if coeffs is None:
        lat = (2 + e) * (1 + e) * lam ** 2 / (8 * (n - 1) * d ** 2) * ((n - 1) / lam) * (params.M - 1) ** e
        return lam / (2 * d ** 2) - lat, -lam / (4 * d ** 2) + 0.5 * lat
    if n != 2:
        raise DomainError("explicit coefficient fields are two-dimensional")
    x1 = np.linspace(-params.M * d, params.M * d, grid)
    xn = np.linspace(-params.g, d, grid)
    X, Y = np.meshgrid(x1, xn, indexing="ij")
    coeffs.check(X, Y)
    a11, a12, a22 = coeffs.evaluate(X, Y)
    pts = np.stack([X, Y], axis=-1)
    H, Ht = barrier_hessian(params, pts)
    Lpsi = -(a11 * H[..., 0, 0] + 2 * a12 * H[..., 0, 1] + a22 * H[..., 1, 1])
    Lpsit = -(a11 * Ht[..., 0, 0] + 2 * a12 * Ht[..., 0, 1] + a22 * Ht[..., 1, 1])
    return float(Lpsi.min()), float(Lpsit.max())


# ---------------------------------------------------------------------------
# Certification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PropertyResult:
    pid: str
    region: str
    min_slack: float
    argmin: tuple
    passed: bool


@dataclass(frozen=True)
class BarrierReport:
    properties: tuple
    extras: tuple = ()

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.properties)

    @property
    def min_slack(self) -> float:
        return min(p.min_slack for p in self.properties)

    def __getitem__(self, pid: str) -> PropertyResult:
        for p in self.properties + self.extras:
            if p.pid == pid:
                return p
        raise KeyError(pid)

    def rows(self):
        for p in self.properties + self.extras:
            yield (p.pid, p.region, p.min_slack, " ".join(f"{v:.17g}" for v in p.argmin))


def _tangential(rng, count, dim, radius, on_sphere=False):
    """Points of the closed ball (or sphere) of given radius in ``R^dim``."""
    if dim == 1:
        if on_sphere:
            return np.where(np.arange(count) % 2 == 0, radius, -radius)[:, None]
        base = np.linspace(-radius, radius, max(count // 2, 2))
        extra = rng.uniform(-radius, radius, count - base.size)
        return np.concatenate([base, extra])[:, None]
    v = rng.standard_normal((count, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    if on_sphere:
        return radius * v
    return radius * v * rng.random((count, 1)) ** (1 / dim)


def _column(rng, xp, gamma: Modulus, top: float, per: int):
    """Stack ``per`` heights above each tangential point, from ``-gamma(2|x'|)`` to ``top``."""
    r = np.linalg.norm(xp, axis=1)
    bottom = -np.asarray(gamma(np.minimum(2 * r, gamma.R0)))
    tau = np.concatenate([[0.0, 1.0], np.linspace(0, 1, per)[1:-1]])
    xn = bottom[:, None] + tau[None, :] * (top - bottom)[:, None]
    pts = np.concatenate([np.repeat(xp, tau.size, axis=0), xn.reshape(-1, 1)], axis=1)
    return pts


def sample_regions(params: BarrierParams, gamma: Modulus, budget: int, seed: int = 0) -> dict:
    """Deterministic samples of the top face, lateral face, slab and small box."""
    rng = np.random.default_rng(seed)
    n, d, Md = params.n, params.delta, params.M * params.delta
    per = 16
    cols = max(budget // (4 * per), 8)
    top_xp = _tangential(rng, 4 * cols, n - 1, Md)
    top = np.concatenate([top_xp, np.full((top_xp.shape[0], 1), d)], axis=1)
    lat = _column(rng, _tangential(rng, cols, n - 1, Md, on_sphere=True), gamma, np.full(cols, d), per)
    slab = _column(rng, _tangential(rng, cols, n - 1, Md), gamma, np.full(cols, d), per)
    if n == 2:
        box_xp = _tangential(rng, cols, 1, d)
    else:
        box_xp = rng.uniform(-d, d, (cols, n - 1))
    box = _column(rng, box_xp, gamma, np.full(cols, d), per)
    return {"top": top, "lateral": lat, "slab": slab, "box": box}


def verify_barrier(params: BarrierParams, gamma: Modulus, sample_budget: int = 10_000,
                   seed: int = 0) -> BarrierReport:
    """Check the ten barrier inequalities by sampling; slack >= -1e-12 passes.

    The operator inequalities are certified against the worst admissible
    diagonal coefficients and reported in units of ``1/delta^2``.  The lateral
    face of ``Psi`` is also reported against the stronger threshold 2.
    """
    if sample_budget < 10_000:
        raise DomainError("sample_budget must be at least 10^4")
    if params.strict:
        params.validate()
        expect = float(gamma(min(2 * params.M * params.delta, gamma.R0)))
        if abs(expect - params.g) > 1e-12 * max(1.0, expect):
            raise ValidationError(f"g={params.g:g} differs from gamma(2 M delta)={expect:g}")
    R = sample_regions(params, gamma, sample_budget, seed)
    d, g = params.delta, params.g
    results = []

    def record(pid, region, pts, slack):
        i = int(np.argmin(slack))
        results.append(PropertyResult(pid, region, float(slack[i]), tuple(pts[i].tolist()),
                                      bool(slack[i] >= -SLACK_TOL)))

    vals = {k: eval_barriers(params, v) for k, v in R.items()}
    xn = {k: v[:, -1] for k, v in R.items()}
    ops = worst_case_operator(params, R["slab"])

    record("psi.1", "top", R["top"], vals["top"][0] - 1)
    record("psi.2", "slab", R["slab"], vals["slab"][0])
    record("psi.3", "lateral", R["lateral"], vals["lateral"][0] - 1)
    record("psi.4", "box", R["box"], 2 * (xn["box"] + g) / d - vals["box"][0])
    record("psi.5", "slab", R["slab"], ops[0] * d ** 2)
    record("psi_tilde.1", "top", R["top"], 1 - vals["top"][1])
    record("psi_tilde.2", "slab", R["slab"], (xn["slab"] + g) / d - vals["slab"][1])
    record("psi_tilde.3", "lateral", R["lateral"], -vals["lateral"][1])
    record("psi_tilde.4", "box", R["box"], vals["box"][1] - (xn["box"] + g) / (4 * d))
    record("psi_tilde.5", "slab", R["slab"], -ops[1] * d ** 2)
    props = tuple(results)
    results.clear()
    record("psi.3.two", "lateral", R["lateral"], vals["lateral"][0] - 2)
    return BarrierReport(props, tuple(results))
