"""Session-wide audit of the discrete maximum principle.

Every linear solve made by any test is recorded; a solve with ``f >= 0``
and zero boundary data that produces a negative nodal value is a violation.
"""
import numpy as np
import pytest

import gammaconvex.solver as solver_pkg
from gammaconvex.solver import cascade, grid

SOLVE_LOG = []


def _audited(solve):
    def wrapper(problem, *args, **kwargs):
        field = solve(problem, *args, **kwargs)
        nonneg_data = bool(np.all(problem.f >= 0) and np.all(problem.dirichlet >= 0))
        SOLVE_LOG.append((nonneg_data, field.min_value, problem.n_unknowns))
        return field
    return wrapper


@pytest.fixture(scope="session", autouse=True)
def audit_solves():
    mp = pytest.MonkeyPatch()
    wrapped = _audited(grid.solve)
    mp.setattr(grid, "solve", wrapped)
    mp.setattr(cascade, "solve", wrapped)
    mp.setattr(solver_pkg, "solve", wrapped)
    yield SOLVE_LOG
    mp.undo()


def max_principle_violations():
    return [rec for rec in SOLVE_LOG if rec[0] and rec[1] < 0]


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Callable recording one summary line per acceptance criterion."""
    def report(number, title, passed, detail=""):
        line = f"ACCEPTANCE {number} {title}: {'PASS' if passed else 'FAIL'}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
    return report


def pytest_collection_modifyitems(session, config, items):
    # acceptance runs last so its solver audit covers the whole session
    items.sort(key=lambda item: item.nodeid.startswith("tests/test_acceptance.py"))


def pytest_terminal_summary(terminalreporter):
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
    bad = max_principle_violations()
    checked = sum(1 for rec in SOLVE_LOG if rec[0])
    terminalreporter.write_line(
        f"discrete maximum principle: {checked} solves with nonnegative data, {len(bad)} violations")
