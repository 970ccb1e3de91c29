"""Finite-difference solver, zoom cascades and boundary experiments."""
from .regions import Box, Disk, GraphRegion, HalfDisk, Region, as_region
from .grid import (DiscreteProblem, SolutionField, Window, cut_fraction, discretize,
                   identity_coefficients, solve, solve_region)
from .cascade import cascade_value, finest_level, halving_windows, solve_cascade
from .experiments import (CoupledOracle, ProbeReport, ProbeVerdict, SandwichResult, SandwichRow,
                          SharpnessRow, aitken, classify_quotients, corrupted, probe_quotient,
                          sandwich_check, sandwich_experiment, sharpness_experiment)
