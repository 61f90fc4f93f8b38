"""Session fixtures and the acceptance-criteria report hook.

The family_reports fixture runs the full benchmark grid once per session
(every instance of every family at K = 100, about a quarter of an hour on
one core); the per-instance cache inside the bench module then serves every
later lookup, including the sandwich checks in the acceptance suite.
"""

from __future__ import annotations

import re

import pytest

from robustprice import bench, instance, robust


@pytest.fixture(scope="session")
def two_point():
    """Support-only uncertainty set on {0.5, 1}: every analytic oracle works."""
    return instance.make_family("lower_bound", (0.5,), 1)


@pytest.fixture(scope="session")
def two_point_summary(two_point):
    return robust.summarize(two_point)


@pytest.fixture(scope="session")
def singleton():
    """Grid {0.5, 1} with mean 0.75: the unique member is F = (0.5, 0.5)."""
    grid = instance.make_grid(0.5, 1.0, 1)
    return instance.UncertaintySet(grid, (instance.MomentConstraint(1, 0.75),), ())


class FamilyRun:
    def __init__(self, matrix, bound, focal, reports):
        self.matrix = matrix          # bench.CrossMatrix
        self.bound = bound            # float, min c* over the family
        self.focal = focal            # (float, float, float) focal minima
        self.reports = reports        # {params: bench.InstanceReport}


@pytest.fixture(scope="session")
def family_reports():
    out = {}
    for family in bench.FAMILIES:
        matrix = bench.cross_matrix(family, workers=1)
        bound = bench.uniform_factor_bound(family, workers=1)
        focal = bench.focal_minima(family, workers=1)
        kept, _ = bench.family_params(family)
        reports = {params: bench.analyze_instance(family, params)
                   for params in kept}
        out[family] = FamilyRun(matrix, bound, focal, reports)
    return out


# Acceptance reporting --------------------------------------------------------

ACCEPTANCE_LABELS = {
    1: "cross matrix, mean family",
    2: "cross matrix, mean_var family",
    3: "cross matrix, median family",
    4: "cross matrix, lower_bound family",
    5: "uniform factor bounds per family",
    6: "focal mechanisms' all-criteria minima",
    7: "oracle equivalence on random instances",
    8: "two-point analytic instance",
    9: "monotonicity and sandwich",
}

_verdicts: dict[int, str] = {}
_PAT = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_runtest_logreport(report):
    m = _PAT.search(report.nodeid)
    if not m:
        return
    num = int(m.group(1))
    if report.failed:
        _verdicts[num] = "FAIL"
    elif report.skipped:
        _verdicts.setdefault(num, "SKIP")
    elif report.when == "call" and report.passed:
        _verdicts.setdefault(num, "PASS")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _verdicts:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(_verdicts):
        label = ACCEPTANCE_LABELS.get(num, "")
        terminalreporter.write_line(f"criterion {num} ({label}): {_verdicts[num]}")
