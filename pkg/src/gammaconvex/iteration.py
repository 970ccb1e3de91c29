"""Corner and flat slope/offset recurrences with their explicit bounds.

Offsets are stored divided by ``delta**m`` (``beta = B_m / delta**m``) so
that long runs with small ``delta`` neither underflow nor lose precision;
the unscaled values are available as properties.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from .barriers import default_constants
from .errors import DomainError, IterationDivergence, ValidationError
from .geometry import Modulus

OVERFLOW_GUARD = 1e12
LIMIT_TOL = 1e-10
LIMIT_RUN = 5
DIVERGENCE_RUN = 5


# ---------------------------------------------------------------------------
# Profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Profile:
    """A nonnegative quantity seen both as a density ``r -> p(r)`` and per step.

    ``steps(m, delta)`` defaults to ``density(delta**m)``; an explicit step
    function must agree with the density at ``r = delta**m``.
    """

    density: Callable[[float], float]
    step_fn: Optional[Callable[[int], float]] = None
    name: str = "profile"
    breakpoints_delta: Optional[float] = None

    def steps(self, m: int, delta: float) -> float:
        if self.step_fn is not None:
            return float(self.step_fn(m))
        return float(self.density(delta ** m))

    def __call__(self, r):
        return self.density(r)

    # constructors -------------------------------------------------------
    @classmethod
    def zero(cls) -> "Profile":
        return cls(lambda r: 0.0 * np.asarray(r, dtype=float), lambda m: 0.0, "zero")

    @classmethod
    def constant(cls, value: float) -> "Profile":
        return cls(lambda r: value + 0.0 * np.asarray(r, dtype=float), lambda m: value,
                   f"const({value:g})")

    @classmethod
    def power(cls, c: float, beta: float) -> "Profile":
        """``p(r) = c * r**beta``."""
        return cls(lambda r: c * np.asarray(r, dtype=float) ** beta, None, f"{c:g}*r^{beta:g}")

    @classmethod
    def from_modulus(cls, gamma: Modulus) -> "Profile":
        """``sigma(r) = gamma(r) / r``."""
        return cls(lambda r: gamma.sigma(np.minimum(r, gamma.R0)), None, f"sigma[{gamma.kind.value}]")

    @classmethod
    def from_steps(cls, fn: Callable[[int], float], delta: float, name: str = "steps") -> "Profile":
        """Piecewise-constant density equal to ``fn(m)`` on ``(delta**(m+1), delta**m]``."""
        ld = math.log(delta)

        def dens(r):
            r = np.asarray(r, dtype=float)
            m = np.floor(np.log(np.maximum(r, 1e-300)) / ld * (1 + 1e-15) + 1e-12)
            m = np.maximum(m, 0).astype(int)
            out = np.array([fn(int(k)) for k in np.ravel(m)], dtype=float).reshape(m.shape)
            return out if out.ndim else float(out)

        return cls(dens, fn, name, breakpoints_delta=delta)

    def shifted(self, t: float) -> "Profile":
        """Density ``r -> p(t r)`` (the profile of the domain dilated by ``1/t``)."""
        base = self

        def dens(r):
            return base.density(t * np.asarray(r, dtype=float))

        return Profile(dens, None, f"{self.name}(t*r)", self.breakpoints_delta)

    def check(self, delta: float, m_max: int = 200, label: str = "profile") -> None:
        vals = np.array([self.steps(m, delta) for m in range(m_max + 1)])
        if np.any(~np.isfinite(vals)) or np.any(vals < 0):
            raise ValidationError(f"{label} must be finite and nonnegative")
        if np.any(np.diff(vals) > 1e-14 * np.maximum(1.0, vals[:-1])):
            raise ValidationError(f"{label} must be nonincreasing in m")
        if self.step_fn is not None:
            m = np.arange(min(m_max, 60) + 1)
            dens = np.array([float(self.density(delta ** int(k))) for k in m])
            if not np.allclose(dens, vals[: m.size], rtol=1e-12, atol=1e-300):
                raise ValidationError(f"{label} steps disagree with its density at r = delta^m")


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
TINY = 5e-324


def _knots(s_lo: float, s_hi: float, step: Optional[float]) -> np.ndarray:
    """Panel edges in ``s = ln(1/r)``: unit spacing plus multiples of ``step``."""
    k = set(np.arange(math.ceil(s_lo), math.floor(s_hi) + 1, dtype=float).tolist())
    if step is not None:
        k.update((step * np.arange(math.ceil(s_lo / step), math.floor(s_hi / step) + 1)).tolist())
    inner = sorted(v for v in k if s_lo < v < s_hi)
    return np.array([s_lo] + inner + [s_hi])


def scaled_log_integral(fn: Callable, s_lo: float, s_hi: float, weight_exp: float,
                        step: Optional[float] = None) -> float:
    """``e^(-w s_hi) int fn(r) / r^(1+w) dr`` over ``r = e^-s``, ``s in [s_lo, s_hi]``.

    The prefactor is folded into the integrand so deep ranges neither
    overflow nor underflow.  Each panel uses 24-point Gauss-Legendre; panels
    follow the profile's step breakpoints so piecewise-constant densities are
    integrated exactly.  ``fn`` must accept arrays.
    """
    if s_hi <= s_lo:
        return 0.0
    k = _knots(s_lo, s_hi, step)
    a, b = k[:-1], k[1:]
    half = 0.5 * (b - a)
    s = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
    r = np.maximum(np.exp(-s), TINY)
    vals = np.asarray(fn(r), dtype=float) * np.exp(weight_exp * (s - s_hi))
    return float(np.sum(half[:, None] * _GL_W[None, :] * vals))


def scaled_tail_integrals(fn: Callable, delta: float, weight_exp: float, m_max: int) -> np.ndarray:
    """``J_m = delta^(m w) int_{delta^m}^1 fn(r)/r^(1+w) dr`` for ``m = 0..m_max``."""
    L = math.log(1 / delta)
    J = np.zeros(m_max + 1)
    decay = math.exp(-weight_exp * L)
    for m in range(1, m_max + 1):
        panel = scaled_log_integral(fn, (m - 1) * L, m * L, weight_exp, L)
        J[m] = J[m - 1] * decay + panel
    return J


# ---------------------------------------------------------------------------
# Inputs and states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IterationInputs:
    delta: float
    mu: float
    M: float
    A1: float
    A2: float
    f: Profile
    sigma: Profile
    D: Optional[Profile] = None
    r0: float = 1.0

    def __post_init__(self):
        if not (0 < self.delta < 1):
            raise ValidationError("delta must lie in (0, 1)")
        if not (0 < self.mu < 1):
            raise ValidationError("mu must lie in (0, 1)")
        for k in ("M", "A1", "A2", "r0"):
            if not getattr(self, k) > 0:
                raise ValidationError(f"{k} must be positive")
        self.f.check(self.delta, label="f profile")
        self.sigma.check(self.delta, label="sigma profile")
        if self.D is not None:
            self.D.check(self.delta, label="D profile")
        if self.f.steps(0, self.delta) > 1 + 1e-15:
            raise ValidationError("f profile must satisfy f_1 <= 1")

    @classmethod
    def defaults(cls, n: int = 2, lam: float = 1.0, f: Optional[Profile] = None,
                 sigma: Optional[Profile] = None, D: Optional[Profile] = None, **over):
        c = default_constants(n, lam)
        kw = dict(delta=c.delta, mu=0.5, M=c.M, A1=4.0, A2=2 * c.M + 1)
        kw.update(over)
        return cls(f=f or Profile.zero(), sigma=sigma or Profile.zero(), D=D, **kw)

    @property
    def alpha(self) -> float:
        """Corner exponent ``ln(mu) / ln(delta)``."""
        return math.log(self.mu) / math.log(self.delta)

    @property
    def alpha_flat(self) -> float:
        """Flat exponent ``ln(1 - mu) / ln(delta)``."""
        return math.log(1 - self.mu) / math.log(self.delta)

    def f_m(self, m):
        return self.f.steps(m, self.delta)

    def sigma_m(self, m):
        return self.sigma.steps(m, self.delta)

    def D_m(self, m):
        return (self.D if self.D is not None else self.sigma).steps(m, self.delta)

    def shifted(self, steps: int = 1) -> "IterationInputs":
        """Inputs of the problem dilated by ``delta**-steps``: profile index shifted by ``steps``."""
        t = self.delta ** steps

        def shift(p: Optional[Profile]):
            if p is None:
                return None
            if p.step_fn is not None:
                fn = p.step_fn
                q = Profile.from_steps(lambda m: fn(m + steps), self.delta, p.name + "+shift")
                return q
            return p.shifted(t)

        return replace(self, f=shift(self.f), sigma=shift(self.sigma), D=shift(self.D))


@dataclass(frozen=True)
class CornerState:
    """Slope ``K`` and scaled offset ``beta = B / delta**m`` after ``m`` steps."""

    K: float
    beta: float
    m: int
    delta: float

    def __post_init__(self):
        if self.K < 0 or self.beta < 0:
            raise ValidationError("corner state must be nonnegative")

    @classmethod
    def initial(cls, delta: float, K0: float = 0.0, B0: float = 1.0) -> "CornerState":
        return cls(K0, B0, 0, delta)

    @property
    def B(self) -> float:
        return self.beta * self.delta ** self.m


def _guard(total: float, m: int) -> None:
    if not np.isfinite(total) or total > OVERFLOW_GUARD:
        raise IterationDivergence(
            f"slope plus scaled offset reached {total:.3g} at step {m}; input is not Dini-like")


def corner_step(state: CornerState, inputs: IterationInputs) -> CornerState:
    m, d = state.m, inputs.delta
    _guard(state.K + state.beta, m)
    K = inputs.mu * (state.K + inputs.M * state.beta)
    beta = (inputs.A1 * inputs.f_m(m) + inputs.A2 * (state.K + state.beta) * inputs.sigma_m(m)) / d
    return CornerState(K, beta, m + 1, d)


def corner_run(inputs: IterationInputs, m_max: int, start: Optional[CornerState] = None):
    """States ``0..m_max`` of the corner recurrence."""
    s = start or CornerState.initial(inputs.delta)
    out = [s]
    for _ in range(m_max):
        s = corner_step(s, inputs)
        out.append(s)
    return out


def _step_of(*profiles) -> Optional[float]:
    for p in profiles:
        if p is not None and p.breakpoints_delta is not None:
            return math.log(1 / p.breakpoints_delta)
    return None


def corner_bound(r: float, inputs: IterationInputs, C: float = 1.0,
                 Lambda: Optional[float] = None) -> float:
    """``C r { r^a (1 + int_r^1 (f_t + s_t)/t^(1+a) dt) + f_(L r) + s_(L r) }``, ``a = alpha``."""
    Lam = 1 / inputs.delta ** 2 if Lambda is None else Lambda
    if not (0 < r <= 1 / Lam * (1 + 1e-12)):
        raise DomainError(f"r={r:g} outside (0, 1/Lambda]")
    return C * r * _corner_bracket(math.log(1 / r), inputs, Lam)


def _corner_bracket(s_r: float, inputs: IterationInputs, Lam: float) -> float:
    """The braced factor of the corner bound at ``r = e^-s_r``."""
    a = inputs.alpha

    def fs(t):
        return np.asarray(inputs.f(t)) + np.asarray(inputs.sigma(t))

    step = _step_of(inputs.f, inputs.sigma) or math.log(1 / inputs.delta)
    scaled = scaled_log_integral(fs, 0.0, s_r, a, step)
    Lr = min(Lam * math.exp(-s_r), 1.0)
    return math.exp(-a * s_r) + scaled + float(fs(Lr))


def fit_corner_constant(states: Sequence[CornerState], inputs: IterationInputs, m_from: int = 2):
    """Smallest ``C`` making ``corner_bound`` dominate ``K_m delta^m + B_m`` for ``m >= m_from``.

    Both sides are compared after division by ``delta**m``.
    """
    Lam = 1 / inputs.delta ** 2
    L = math.log(1 / inputs.delta)
    ratios = np.array([(s.K + s.beta) / _corner_bracket(s.m * L, inputs, Lam)
                       for s in states[m_from:]])
    return float(ratios.max()), ratios


# ---------------------------------------------------------------------------
# Summability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SumBound:
    partial_sum: float
    stated_bound: float
    valid_bound: float

    @property
    def stated_bound_holds(self) -> bool:
        return self.partial_sum <= self.stated_bound * (1 + 1e-12)

    @property
    def valid_bound_holds(self) -> bool:
        return self.partial_sum <= self.valid_bound * (1 + 1e-12)


def sum_bound_check(profile: Profile, delta: float, m_max: int) -> SumBound:
    """Partial sum of ``profile(delta^i)`` against two integral bounds.

    ``stated_bound`` uses the factor ``delta/(1-delta)``; it is exact for linear
    densities but can fail for sublinear ones.  ``valid_bound`` uses
    ``1/ln(1/delta)``, which holds for every density nondecreasing in ``r``.
    """
    if not (0 < delta < 1) or m_max < 0:
        raise DomainError("need 0 < delta < 1 and m_max >= 0")
    vals = np.array([profile.steps(i, delta) for i in range(m_max + 1)])
    if vals[0] > 1 + 1e-15:
        raise DomainError("profile(0) must be <= 1")
    total = float(vals.sum())
    integral = scaled_log_integral(profile.density, 0.0, m_max * math.log(1 / delta), 0.0,
                                   _step_of(profile) or math.log(1 / delta))
    out = SumBound(total, 1 + delta / (1 - delta) * integral, 1 + integral / math.log(1 / delta))
    if not out.valid_bound_holds:
        raise ValidationError("partial sum exceeds the integral bound; profile is not monotone")
    return out


# ---------------------------------------------------------------------------
# Flat recurrence
# ---------------------------------------------------------------------------

BRANCH_A = "A"
BRANCH_B = "B"


@dataclass(frozen=True)
class FlatState:
    """Slopes ``k <= K`` and scaled offsets ``beta_b = b/delta^m``, ``beta_B = B/delta^m``."""

    k: float
    K: float
    beta_b: float
    beta_B: float
    m: int
    delta: float
    branch_history: tuple = ()

    def __post_init__(self):
        if min(self.k, self.beta_b, self.beta_B) < 0 or self.K < self.k * (1 - 1e-15) - 1e-300:
            raise ValidationError("flat state must satisfy K >= k >= 0 and b, B >= 0")

    @classmethod
    def initial(cls, delta: float) -> "FlatState":
        return cls(0.0, 0.0, 0.0, 1.0, 0, delta)

    @property
    def b(self) -> float:
        return self.beta_b * self.delta ** self.m

    @property
    def B(self) -> float:
        return self.beta_B * self.delta ** self.m

    @property
    def gap(self) -> float:
        return self.K - self.k


def flat_step(state: FlatState, branch: str, inputs: IterationInputs) -> FlatState:
    m, d, M, mu = state.m, inputs.delta, inputs.M, inputs.mu
    k, K, bb, BB = state.k, state.K, state.beta_b, state.beta_B
    _guard(K + k + max(bb, BB), m)
    fm = inputs.A1 * inputs.f_m(m)
    beta_b = (fm + inputs.A2 * (K + k + bb) * inputs.D_m(m)) / d
    beta_B = (fm + inputs.A2 * (K + k + BB) * inputs.sigma_m(m)) / d
    if branch == BRANCH_A:
        k1 = max(k - M * bb + mu * (K - k), 0.0)
        K1 = K + M * BB
    elif branch == BRANCH_B:
        k1 = max(k - M * bb, 0.0)
        K1 = K + M * BB - mu * (K - k)
    else:
        raise DomainError(f"unknown branch {branch!r}")
    return FlatState(k1, K1, beta_b, beta_B, m + 1, d, state.branch_history + (branch,))


class BranchOracle(Protocol):
    def __call__(self, m: int, state: FlatState, inputs: IterationInputs) -> str: ...


@dataclass
class FixedOracle:
    sequence: Sequence[str] = (BRANCH_A,)

    def __call__(self, m, state, inputs):
        return self.sequence[m % len(self.sequence)]


@dataclass
class RandomOracle:
    seed: int = 0

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)

    def __call__(self, m, state, inputs):
        return BRANCH_A if self._rng.random() < 0.5 else BRANCH_B


class AdversarialOracle:
    """Always the branch that leaves the larger gap ``K' - k'``."""

    def __call__(self, m, state, inputs):
        ga = flat_step(state, BRANCH_A, inputs).gap
        gb = flat_step(state, BRANCH_B, inputs).gap
        return BRANCH_A if ga >= gb else BRANCH_B


@dataclass(frozen=True)
class FlatRun:
    states: tuple
    limit: Optional[float]
    limit_step: Optional[int]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.states], dtype=float)

    @property
    def gaps(self) -> np.ndarray:
        return self.column("gap")

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.column("K") + self.column("k"))


def flat_run(inputs: IterationInputs, oracle: BranchOracle, m_max: int = 200,
             start: Optional[FlatState] = None) -> FlatRun:
    """Iterate the flat recurrence; detect the midpoint limit and runaway gaps.

    A run is declared divergent when the gap grows for five consecutive
    steps while exceeding the size it could reach from forcing alone,
    ``M (beta_b + beta_B) / mu``.
    """
    if m_max < 50:
        raise DomainError("flat_run needs m_max >= 50")
    s = start or FlatState.initial(inputs.delta)
    states = [s]
    growth = 0
    still = 0
    limit = None
    limit_step = None
    for _ in range(m_max):
        s1 = flat_step(s, oracle(s.m, s, inputs), inputs)
        forced = inputs.M * (s.beta_b + s.beta_B) / inputs.mu
        if s1.gap > s.gap and s.gap > forced:
            growth += 1
            if growth >= DIVERGENCE_RUN:
                raise IterationDivergence(
                    f"gap grew for {DIVERGENCE_RUN} consecutive steps up to step {s1.m}")
        else:
            growth = 0
        if abs((s1.K + s1.k) - (s.K + s.k)) < LIMIT_TOL:
            still += 1
            if still >= LIMIT_RUN and limit is None:
                limit = 0.5 * (s1.K + s1.k)
                limit_step = s1.m
        else:
            still = 0
            limit = None
            limit_step = None
        states.append(s1)
        s = s1
    return FlatRun(tuple(states), limit, limit_step)


@dataclass(frozen=True)
class ClaimReport:
    bounded: bool
    sup_slopes: float
    offsets_vanish: bool
    final_scaled_offsets: tuple
    gap_vanishes: bool
    final_gap: float
    cauchy: bool
    cauchy_spread: float

    @property
    def all_hold(self) -> bool:
        return self.bounded and self.offsets_vanish and self.gap_vanishes and self.cauchy


def check_claims(run: FlatRun, tol: float = 1e-6, tail: int = 50) -> ClaimReport:
    """Evaluate the four sequence claims at the end of a run."""
    sums = run.column("K") + run.column("k")
    last = run.states[-1]
    sup = float(sums.max())
    mids = run.midpoints[-tail:]
    spread = float(np.max(np.abs(mids - mids[-1])))
    return ClaimReport(
        bounded=bool(np.isfinite(sup) and sup < OVERFLOW_GUARD),
        sup_slopes=sup,
        offsets_vanish=bool(max(last.beta_b, last.beta_B) < tol),
        final_scaled_offsets=(last.beta_b, last.beta_B),
        gap_vanishes=bool(last.gap < tol),
        final_gap=float(last.gap),
        cauchy=bool(spread < tol and run.limit is not None),
        cauchy_spread=spread,
    )


def _gap_integrand(inputs: IterationInputs):
    D = inputs.D if inputs.D is not None else inputs.sigma

    def fds(r):
        return np.asarray(inputs.f(r)) + np.asarray(D(r)) + np.asarray(inputs.sigma(r))

    return fds


def gap_bound(inputs: IterationInputs, m: int, C6: float = 1.0) -> float:
    """``C6 delta^(m a) (1 + int_{delta^m}^1 (f + D + sigma)/r^(1+a) dr)`` with ``a = alpha_flat``."""
    a = inputs.alpha_flat
    L = math.log(1 / inputs.delta)
    step = _step_of(inputs.f, inputs.sigma, inputs.D) or L
    scaled = scaled_log_integral(_gap_integrand(inputs), 0.0, m * L, a, step)
    return C6 * (math.exp(-a * m * L) + scaled)


def gap_bounds(inputs: IterationInputs, m_max: int, C6: float = 1.0) -> np.ndarray:
    """``gap_bound`` for ``m = 0..m_max`` in one pass."""
    a = inputs.alpha_flat
    L = math.log(1 / inputs.delta)
    J = scaled_tail_integrals(_gap_integrand(inputs), inputs.delta, a, m_max)
    return C6 * (np.exp(-a * L * np.arange(m_max + 1)) + J)


def gap_floor(run: FlatRun) -> float:
    """Round-off floor ``64 eps max(K)`` under which a gap carries no information."""
    return 64 * np.finfo(float).eps * float(max(run.column("K").max(), 1.0))


def fit_gap_constant(run: FlatRun, inputs: IterationInputs, m_from: int = 1):
    """Smallest ``C6`` with ``|K_{m+1} - k_{m+1}| <= gap_bound(m, C6)`` for ``m >= m_from``.

    Steps whose gap sits at the round-off floor are excluded from the fit.
    Returns ``(C6, ratios)`` with excluded ratios set to ``nan``.
    """
    gaps = run.gaps
    g1 = gap_bounds(inputs, len(gaps) - 2)
    ratios = gaps[m_from + 1:] / g1[m_from:]
    ratios = np.where(gaps[m_from + 1:] > gap_floor(run), ratios, np.nan)
    C6 = float(np.nanmax(ratios)) if np.any(np.isfinite(ratios)) else 0.0
    return C6, ratios


def gap_dominated(run: FlatRun, inputs: IterationInputs, C6: float, m_from: int = 1) -> bool:
    """Every gap lies below ``gap_bound(m, C6)`` or the round-off floor."""
    gaps = run.gaps
    g1 = C6 * gap_bounds(inputs, len(gaps) - 2)
    return bool(np.all(gaps[m_from + 1:] <= np.maximum(g1[m_from:], gap_floor(run))))


def sequence_table(run_states, inputs: IterationInputs, bounds=None):
    """Rows ``(m, k, K, b, B, gap, bound)`` for CSV output (corner runs have ``k = b = 0``)."""
    rows = []
    for i, s in enumerate(run_states):
        if isinstance(s, CornerState):
            row = (s.m, 0.0, s.K, 0.0, s.B, s.K)
        else:
            row = (s.m, s.k, s.K, s.b, s.B, s.gap)
        rows.append(row + ((bounds[i] if bounds is not None else float("nan")),))
    return rows
