"""Boundary differentiability toolkit for gamma-convex planar domains.

Subpackages and modules:

* ``geometry``: moduli, Dini classification, support directions, blow-up cones
* ``barriers``: the explicit barrier pair and its certification
* ``iteration``: corner and flat slope recurrences
* ``solver``: monotone finite differences, zoom cascades, boundary probes
* ``harness``: config files and the ``gammaconvex`` command
"""
from .errors import (ConfigError, DiscretizationError, DomainError, GammaConvexError,
                     InconclusiveError, IterationDivergence, SolverError, ValidationError)

__version__ = "0.1.0"
