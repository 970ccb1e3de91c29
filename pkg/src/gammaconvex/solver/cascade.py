"""Nested zoom windows: each level re-solves on a smaller window around a point.

Data on the artificial window edges comes from bilinear interpolation of
the previous level, so every level keeps the same number of cells while the
spacing halves with the window.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..errors import DomainError
from .grid import SolutionField, Window, discretize, solve
from .regions import as_region


def halving_windows(start: float, stop: float) -> list:
    """Half-widths ``start, start/2, ...`` down to ``stop`` inclusive."""
    if not (0 < stop <= start):
        raise DomainError("need 0 < stop <= start")
    out = [start]
    while out[-1] / 2 >= stop * (1 - 1e-12):
        out.append(out[-1] / 2)
    return out


def solve_cascade(region, coeffs=None, f=1.0, center=(0.0, 0.0), halves: Sequence[float] = (1.0,),
                  cells: int = 256, tol: float = 1e-10) -> list:
    """Solve on windows of the given (decreasing) half-widths centred at ``center``."""
    region = as_region(region)
    levels = []
    parent: Optional[SolutionField] = None
    for W in halves:
        if parent is not None and W > parent.window.half * (1 + 1e-12):
            raise DomainError("zoom windows must shrink")
        win = Window(float(center[0]), float(center[1]), float(W), cells)
        edge = parent.interpolate if parent is not None else None
        field = solve(discretize(region, coeffs, f, window=win, edge=edge), tol)
        levels.append(field)
        parent = field
    return levels


def finest_level(levels: Sequence[SolutionField], x: float, y: float, margin_cells: int = 2):
    """Finest level whose window contains ``(x, y)`` at least ``margin_cells`` away from its edge."""
    best = None
    for lev in levels:
        w = lev.window
        m = margin_cells * w.h
        if abs(x - w.cx) <= w.half - m and abs(y - w.cy) <= w.half - m:
            if best is None or w.h < best.window.h:
                best = lev
    if best is None:
        raise DomainError(f"point ({x:g}, {y:g}) is not covered by any zoom level")
    return best


def cascade_value(levels: Sequence[SolutionField], x: float, y: float) -> float:
    lev = finest_level(levels, x, y)
    return float(lev.interpolate(np.array([x]), np.array([y]))[0])
