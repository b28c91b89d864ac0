import math
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from rdslab.geometry import Disk, Ellipse, PerturbedDisk, SurfaceKind, build_table  # noqa: E402

TABLE_SPECS = {
    "disk_e2": (Disk(1.0 / (2.0 * math.pi)), SurfaceKind.EUCLIDEAN),
    "disk_s2": (Disk(0.5), SurfaceKind.SPHERICAL),
    "disk_h2": (Disk(1.0), SurfaceKind.HYPERBOLIC),
    "ellipse": (Ellipse(1.5, 1.0), SurfaceKind.EUCLIDEAN),
    "pdisk_h2": (PerturbedDisk(1.0, 0.1, 3), SurfaceKind.HYPERBOLIC),
    "pdisk_s2": (PerturbedDisk(0.5, 0.03, 3), SurfaceKind.SPHERICAL),
    "pdisk_e2": (PerturbedDisk(0.2, 0.05, 3), SurfaceKind.EUCLIDEAN),
}

_cache = {}


def get_table(name):
    if name not in _cache:
        _cache[name] = build_table(*TABLE_SPECS[name])
    return _cache[name]


@pytest.fixture(scope="session")
def tables():
    return {name: get_table(name) for name in TABLE_SPECS}


# acceptance lines are collected here and printed in the terminal summary
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
