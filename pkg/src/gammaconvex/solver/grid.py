"""Shortley-Weller discretization of ``-a^{ij} D_ij u = f`` with Dirichlet data.

The cross term is split along the diagonals,

    a11 u_xx + 2 a12 u_xy + a22 u_yy
        = (a11 - |a12|) u_xx + (a22 - |a12|) u_yy + |a12| D_ee u,

with ``e = (1, sign a12)``, so every arm carries a nonnegative weight and the
assembled matrix is an M-matrix whenever ``|a12| <= min(a11, a22)``.  Arms
that leave the domain are shortened to the boundary crossing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from ..barriers import EllipticCoefficients
from ..errors import DiscretizationError, DomainError, SolverError
from .regions import Region, as_region

SNAP_TOL = 1e-8
BISECT_ITERS = 52
DIRECTIONS = ((1, 0), (0, 1), (1, 1), (1, -1))


def identity_coefficients() -> EllipticCoefficients:
    return EllipticCoefficients.constant(np.eye(2), 1.0)


@dataclass(frozen=True)
class Window:
    """Square grid window ``[cx - half, cx + half] x [cy - half, cy + half]``."""

    cx: float = 0.0
    cy: float = 0.0
    half: float = 1.0
    cells: int = 64

    @property
    def h(self) -> float:
        return 2 * self.half / self.cells

    def axes(self):
        k = np.arange(self.cells + 1)
        return self.cx - self.half + self.h * k, self.cy - self.half + self.h * k

    @classmethod
    def unit(cls, h: float) -> "Window":
        cells = 2.0 / h
        if abs(cells - round(cells)) > 1e-9 or round(cells) < 2:
            raise DomainError(f"h={h} must divide the unit square into whole cells")
        return cls(0.0, 0.0, 1.0, int(round(cells)))


def _as_field(v) -> Callable:
    if callable(v):
        return v
    c = float(v)
    return lambda x, y: np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, c)


def cut_fraction(region: Region, px, py, qx, qy, iters: int = BISECT_ITERS) -> np.ndarray:
    """Fraction along ``P -> Q`` where the region boundary is crossed (``P`` inside, ``Q`` not)."""
    lo = np.zeros(np.shape(px))
    hi = np.ones(np.shape(px))
    dx = qx - px
    dy = qy - py
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ins = np.asarray(region.phi(px + mid * dx, py + mid * dy)) < 0
        lo = np.where(ins, mid, lo)
        hi = np.where(ins, hi, mid)
    return 0.5 * (lo + hi)


@dataclass
class DiscreteProblem:
    region: Region
    window: Window
    inside: np.ndarray          # nodes strictly inside the region
    unknown: np.ndarray         # nodes carrying unknowns
    index: np.ndarray           # unknown number per node, -1 elsewhere
    dirichlet: np.ndarray       # prescribed nodal values (edge and snapped nodes)
    thetas: dict                # (direction, sign) -> arm fractions per unknown
    coeffs: tuple               # (a11, a12, a22) per unknown
    f: np.ndarray               # right-hand side per unknown
    matrix: sp.csr_matrix
    rhs: np.ndarray
    snapped: int = 0

    @property
    def h(self) -> float:
        return self.window.h

    @property
    def n_unknowns(self) -> int:
        return int(self.unknown.sum())

    def node_coords(self):
        xs, ys = self.window.axes()
        return np.meshgrid(xs, ys, indexing="ij")

    def is_m_matrix(self, tol: float = 1e-12) -> bool:
        A = self.matrix.tocoo()
        off = A.row != A.col
        if np.any(A.data[off] > tol * np.abs(A.data).max()):
            return False
        diag = self.matrix.diagonal()
        offsum = np.asarray(np.abs(self.matrix).sum(axis=1)).ravel() - np.abs(diag)
        return bool(np.all(diag > 0) and np.all(diag >= offsum * (1 - 1e-12)))


def discretize(region, coeffs: Optional[EllipticCoefficients] = None, f=1.0,
               h: Optional[float] = None, *, window: Optional[Window] = None,
               g: Optional[Callable] = None, edge: Optional[Callable] = None,
               dd_margin: float = 0.0) -> DiscreteProblem:
    """Assemble the Shortley-Weller system on a square window.

    ``g`` gives Dirichlet data on the region boundary (zero by default);
    ``edge`` gives data at window-edge nodes that lie inside the region,
    which happens for zoom windows.
    """
    region = as_region(region)
    coeffs = coeffs or identity_coefficients()
    if window is None:
        if h is None:
            raise DomainError("give either h or a window")
        window = Window.unit(h)
    elif h is not None and abs(window.h - h) > 1e-15:
        raise DomainError("h disagrees with the window spacing")
    hh = window.h
    xs, ys = window.axes()
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    inside = np.asarray(region.phi(X, Y)) < 0
    interior = inside.copy()
    interior[0, :] = interior[-1, :] = interior[:, 0] = interior[:, -1] = False
    gfun = _as_field(0.0 if g is None else g)

    ii, jj = np.nonzero(interior)
    a11, a12, a22 = coeffs.evaluate(X[ii, jj], Y[ii, jj])
    a11 = np.array(a11, dtype=float)
    a12 = np.array(a12, dtype=float)
    a22 = np.array(a22, dtype=float)
    coeffs.check(X[ii, jj], Y[ii, jj])
    slack = np.minimum(a11, a22) - np.abs(a12) - dd_margin
    if np.any(slack < -1e-14):
        p = int(np.argmin(slack))
        node = (float(X[ii[p], jj[p]]), float(Y[ii[p], jj[p]]))
        raise DiscretizationError(f"cross term not diagonally dominant at node {node}", node)
    weights = {(1, 0): a11 - np.abs(a12), (0, 1): a22 - np.abs(a12),
               (1, 1): np.maximum(a12, 0.0), (1, -1): np.maximum(-a12, 0.0)}
    active = [d for d in DIRECTIONS if np.any(weights[d] > 0)]

    # boundary crossings of every active arm
    thetas = {}
    cut = {}
    for d in active:
        for s in (1, -1):
            qi, qj = ii + s * d[0], jj + s * d[1]
            out = ~inside[qi, qj]
            th = np.ones(ii.size)
            if out.any():
                th[out] = cut_fraction(region, X[ii[out], jj[out]], Y[ii[out], jj[out]],
                                       X[qi[out], qj[out]], Y[qi[out], qj[out]])
            thetas[(d, s)] = th
            cut[(d, s)] = out

    # snap nodes that sit on the boundary to within SNAP_TOL of an arm
    snap = np.zeros(ii.size, dtype=bool)
    for key, th in thetas.items():
        snap |= cut[key] & (th < SNAP_TOL)
    unknown = interior.copy()
    unknown[ii[snap], jj[snap]] = False
    dirichlet = np.zeros_like(X)
    edge_nodes = inside & ~interior
    if edge_nodes.any():
        if edge is None:
            raise DiscretizationError("window edge lies inside the region but no edge data was given")
        dirichlet[edge_nodes] = np.asarray(edge(X[edge_nodes], Y[edge_nodes]), dtype=float)
    if snap.any():
        dirichlet[ii[snap], jj[snap]] = gfun(X[ii[snap], jj[snap]], Y[ii[snap], jj[snap]])

    keep = ~snap
    ii, jj = ii[keep], jj[keep]
    a11, a12, a22 = a11[keep], a12[keep], a22[keep]
    index = -np.ones(X.shape, dtype=np.int64)
    index[ii, jj] = np.arange(ii.size)
    nU = ii.size
    fvals = np.asarray(_as_field(f)(X[ii, jj], Y[ii, jj]), dtype=float)
    rhs = fvals.copy()
    rows = [np.arange(nU)]
    cols = [np.arange(nU)]
    diag = np.zeros(nU)
    vals_off = []
    h2 = hh * hh
    for d in active:
        w = weights[d][keep]
        tp = thetas[(d, 1)][keep]
        tm = thetas[(d, -1)][keep]
        thetas[(d, 1)] = tp
        thetas[(d, -1)] = tm
        for s, th, other in ((1, tp, tm), (-1, tm, tp)):
            coef = 2 * w / (h2 * th * (th + other))
            diag += coef
            qi, qj = ii + s * d[0], jj + s * d[1]
            is_cut = cut[(d, s)][keep]
            nb = index[qi, qj]
            unk = (nb >= 0) & ~is_cut
            rows.append(np.nonzero(unk)[0])
            cols.append(nb[unk])
            vals_off.append(-coef[unk])
            # Dirichlet arms: boundary crossing or prescribed node
            bnd = ~unk
            if bnd.any():
                val = np.empty(int(bnd.sum()))
                cb = is_cut[bnd]
                px, py = X[ii[bnd], jj[bnd]], Y[ii[bnd], jj[bnd]]
                qx, qy = X[qi[bnd], qj[bnd]], Y[qi[bnd], qj[bnd]]
                t = th[bnd]
                if cb.any():
                    val[cb] = gfun(px[cb] + t[cb] * (qx[cb] - px[cb]), py[cb] + t[cb] * (qy[cb] - py[cb]))
                val[~cb] = dirichlet[qi[bnd][~cb], qj[bnd][~cb]]
                rhs[bnd] += coef[bnd] * val
    data = np.concatenate([diag] + vals_off)
    A = sp.csr_matrix((data, (np.concatenate(rows), np.concatenate(cols))), shape=(nU, nU))
    A.sum_duplicates()
    return DiscreteProblem(region, window, inside, unknown, index, dirichlet, thetas,
                           (a11, a12, a22), fvals, A, rhs, int(snap.sum()))


@dataclass
class SolutionField:
    problem: DiscreteProblem
    u: np.ndarray
    residual: float

    @property
    def h(self) -> float:
        return self.problem.h

    @property
    def window(self) -> Window:
        return self.problem.window

    def grid_values(self) -> np.ndarray:
        """Nodal values on the full window; nodes outside the region carry 0."""
        P = self.problem
        U = np.where(P.inside, P.dirichlet, 0.0)
        U[P.unknown] = self.u[P.index[P.unknown]]
        return U

    def node_value(self, x: float, y: float) -> float:
        w = self.window
        i = (x - (w.cx - w.half)) / w.h
        j = (y - (w.cy - w.half)) / w.h
        ri, rj = int(round(i)), int(round(j))
        if abs(i - ri) > 1e-6 or abs(j - rj) > 1e-6:
            raise DomainError(f"({x}, {y}) is not a grid node")
        if not (0 <= ri <= w.cells and 0 <= rj <= w.cells):
            raise DomainError(f"({x}, {y}) lies outside the window")
        return float(self.grid_values()[ri, rj])

    def interpolate(self, x, y) -> np.ndarray:
        """Bilinear interpolation of the nodal values (outside nodes count as 0)."""
        w = self.window
        U = self.grid_values()
        fx = (np.asarray(x, dtype=float) - (w.cx - w.half)) / w.h
        fy = (np.asarray(y, dtype=float) - (w.cy - w.half)) / w.h
        if np.any(fx < -1e-9) or np.any(fy < -1e-9) or np.any(fx > w.cells + 1e-9) or np.any(fy > w.cells + 1e-9):
            raise DomainError("interpolation point outside the window")
        i0 = np.clip(np.floor(fx).astype(int), 0, w.cells - 1)
        j0 = np.clip(np.floor(fy).astype(int), 0, w.cells - 1)
        tx = np.clip(fx - i0, 0.0, 1.0)
        ty = np.clip(fy - j0, 0.0, 1.0)
        return ((1 - tx) * (1 - ty) * U[i0, j0] + tx * (1 - ty) * U[i0 + 1, j0]
                + (1 - tx) * ty * U[i0, j0 + 1] + tx * ty * U[i0 + 1, j0 + 1])

    def rows(self):
        X, Y = self.problem.node_coords()
        m = self.problem.unknown
        U = self.grid_values()
        return np.column_stack([X[m], Y[m], U[m]])

    @property
    def min_value(self) -> float:
        return float(self.u.min()) if self.u.size else 0.0


def solve(problem: DiscreteProblem, tol: float = 1e-10, refinements: int = 2) -> SolutionField:
    """Direct sparse solve with a residual check and optional iterative refinement."""
    if not tol > 0:
        raise DomainError("tol must be positive")
    A, b = problem.matrix, problem.rhs
    if A.shape[0] == 0:
        return SolutionField(problem, np.zeros(0), 0.0)
    Ac = A.tocsc()
    absA = abs(A)
    scale = 1 + (float(np.max(np.abs(problem.f))) if problem.f.size else 0.0)
    eps = np.finfo(float).eps

    def check(u):
        r = float(np.max(np.abs(A @ u - b)))
        # rows with huge short-arm weights can only be solved to backward accuracy
        floor = 1e3 * eps * float(np.max(absA @ np.abs(u) + np.abs(b)))
        return r, r <= tol * scale + floor

    u = spsolve(Ac, b)
    res, ok = check(u)
    for _ in range(refinements):
        if ok:
            break
        u = u + spsolve(Ac, b - A @ u)
        res, ok = check(u)
    if not (np.all(np.isfinite(u)) and ok):
        raise SolverError(f"residual {res:.3g} above tolerance", res)
    return SolutionField(problem, u, res)


def solve_region(region, coeffs=None, f=1.0, h: float = 1 / 64, tol: float = 1e-10, **kw) -> SolutionField:
    return solve(discretize(region, coeffs, f, h, **kw), tol)
