"""Shared fixtures: the standard family zoo and seeded generators."""

import sys

import numpy as np
import pytest

from rrms.blocks import (
    custom_discrete_family,
    geometric_path_family,
    hooking_family,
    k2_family,
    uniform_segment_family,
)
from rrms.dists import constant, exponential, geometric


def rrt_family():
    """Uniform attachment: every block is a unit-weight point one step deep."""
    return k2_family(0.0, constant(1.0))


def two_block_family():
    """Two discrete variants with unequal weights plus a point initial block."""
    return custom_discrete_family(
        [(2.0, [(0.0, 0.5), (1.0, 0.5)]), (1.0, [(2.0, 1.0)])],
        [0.5, 0.5],
        (1.0, [(0.0, 1.0)]),
    )


def path2_hooking_family():
    """Path of length 2 hooked at an end, chi=0, rho=1."""
    return hooking_family([([(0, 1), (1, 2)], 0)], [1.0], 0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def geo():
    return geometric_path_family(0.5)


@pytest.fixture
def useg():
    return uniform_segment_family(exponential(1.0))


@pytest.fixture
def k2geo():
    return k2_family(0.5, geometric(0.3))


@pytest.fixture
def rrt():
    return rrt_family()


@pytest.fixture
def two_block():
    return two_block_family()


@pytest.fixture
def hook_path2():
    return path2_hooking_family()


def family_zoo():
    """One family per kind, for parametrized sweeps."""
    return {
        "geometric_path": geometric_path_family(0.5),
        "uniform_segment": uniform_segment_family(exponential(1.0)),
        "k2": k2_family(0.5, geometric(0.3)),
        "rrt": rrt_family(),
        "hooking": path2_hooking_family(),
        "custom_discrete": two_block_family(),
    }


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # Acceptance verdicts are printed inside the tests and therefore eaten
    # by capture when they pass; echo them here so every run shows them.
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICTS", None) if mod is not None else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
