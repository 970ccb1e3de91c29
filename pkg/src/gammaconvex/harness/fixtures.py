"""Named domains, profiles and the shipped example configs."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..barriers import EllipticCoefficients, default_constants
from ..errors import ConfigError
from ..geometry import (GraphDomain, flat_graph, log_cusp_graph, parabola_graph, power_cusp_graph,
                        reflex_graph, wedge_graph)
from ..iteration import Profile
from ..solver.regions import Box, Disk, GraphRegion, HalfDisk, Region

CONFIG_DIR = Path(__file__).with_name("configs")


def graph_fixture(name: str, alpha: float = 0.5, q: float = 2.0) -> GraphDomain:
    builders = {
        "flat": flat_graph,
        "wedge": wedge_graph,
        "parabola": parabola_graph,
        "reflex": reflex_graph,
        "power-cusp": lambda: power_cusp_graph(alpha),
        "log-cusp": lambda: log_cusp_graph(q),
    }
    if name not in builders:
        raise ConfigError(f"unknown graph fixture {name!r}", None, "domain")
    return builders[name]()


def region_fixture(name: str, alpha: float = 0.5, q: float = 2.0) -> Region:
    if name == "disk":
        return Disk()
    if name == "half-disk":
        return HalfDisk()
    if name == "square":
        return Box()
    return GraphRegion(graph_fixture(name, alpha, q))


def coefficients_from(params) -> EllipticCoefficients:
    A = np.array([[params["a11"], params["a12"]], [params["a12"], params["a22"]]], dtype=float)
    coeffs = EllipticCoefficients.constant(A, params["lam"])
    coeffs.check(np.zeros(1), np.zeros(1))
    return coeffs


def profile_from(kind: str, c, beta: float, n: int = 2, lam: float = 1.0, share: float = 1.0) -> Profile:
    """``zero``, ``constant`` or ``power``; a missing ``c`` means ``share * C_small``."""
    if kind == "zero":
        return Profile.zero()
    if c is None:
        c = share * default_constants(n, lam).C_small
    if kind == "constant":
        return Profile.constant(c)
    return Profile.power(c, beta)


def shipped_configs() -> dict:
    """Example configs shipped with the package, keyed by file stem."""
    return {p.stem: p.read_text() for p in sorted(CONFIG_DIR.glob("*.cfg"))}
