"""Planar regions described by level-set functions (negative inside)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..geometry import GraphDomain


class Region:
    name = "region"

    def phi(self, x, y):  # pragma: no cover - interface
        raise NotImplementedError

    def contains(self, x, y):
        return np.asarray(self.phi(x, y)) < 0


@dataclass(frozen=True)
class Disk(Region):
    radius: float = 1.0
    cx: float = 0.0
    cy: float = 0.0
    name: str = "disk"

    def phi(self, x, y):
        return (np.asarray(x) - self.cx) ** 2 + (np.asarray(y) - self.cy) ** 2 - self.radius ** 2


@dataclass(frozen=True)
class HalfDisk(Region):
    """Upper half of the disk of given radius centred at the origin."""

    radius: float = 1.0
    name: str = "half-disk"

    def phi(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        return np.maximum(x * x + y * y - self.radius ** 2, -y)


@dataclass(frozen=True)
class Box(Region):
    xlo: float = -1.0
    xhi: float = 1.0
    ylo: float = -1.0
    yhi: float = 1.0
    name: str = "box"

    def phi(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        return np.maximum(np.maximum(self.xlo - x, x - self.xhi), np.maximum(self.ylo - y, y - self.yhi))


@dataclass(frozen=True)
class GraphRegion(Region):
    """The unit square above a boundary graph."""

    domain: GraphDomain
    name: str = "graph"

    def phi(self, x, y):
        return self.domain.phi(x, y)


def as_region(obj) -> Region:
    if isinstance(obj, Region):
        return obj
    if isinstance(obj, GraphDomain):
        return GraphRegion(obj, obj.name)
    raise TypeError(f"cannot interpret {type(obj).__name__} as a region")
