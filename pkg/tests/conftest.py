"""Shared configurations and cached problems."""

from functools import lru_cache

import numpy as np
import pytest

from fracpx.exponents import ExponentFamily as F, ProblemConfig
from fracpx.grid import Problem

UNIT = ((0.0, 1.0),)


def constant_config(value=2.0, alpha=1.0, beta=1.0, **kw):
    return ProblemConfig(dimension=1, s=0.25, omega=UNIT, p=F.constant(value), q=F.constant(value),
                         r=F.constant(value), alpha=alpha, beta=beta, **kw)


def linear_config(**kw):
    return constant_config(2.0, alpha=0.0, beta=0.0, **kw)


def dip_config(**kw):
    """r dips to 1.1 with p = q = 2."""
    return ProblemConfig(dimension=1, s=0.25, omega=UNIT, p=F.constant(2.0), q=F.constant(2.0),
                         r=F.bump(2.0, -0.9, (0.5,), 0.2), alpha=1.0, beta=1.0, **kw)


def spike_config(**kw):
    """r rises to 3.5 with p = q = 2."""
    return ProblemConfig(dimension=1, s=0.25, omega=UNIT, p=F.constant(2.0), q=F.constant(2.0),
                         r=F.bump(2.0, 1.5, (0.5,), 0.2), alpha=1.0, beta=1.0, **kw)


def growth_config(**kw):
    """p = 2 < r in [2.5, 2.9] < q in [3, 3.8] < 4."""
    return ProblemConfig(dimension=1, s=0.25, omega=UNIT, p=F.constant(2.0), q=F.affine(3.0, (0.8,)),
                         r=F.affine(2.5, (0.4,)), alpha=1.0, beta=1.0, **kw)


def smooth_variable_config(**kw):
    """All exponents >= 2, so every functional is twice differentiable."""
    return ProblemConfig(dimension=1, s=0.25, omega=UNIT, p=F.bump(2.0, 0.6, (0.5,), 0.5),
                         q=F.affine(2.7, (0.3,)), r=F.affine(2.2, (0.5,)), alpha=1.0, beta=1.0, **kw)


def rough_variable_config(**kw):
    """p dips below 2 and r varies across 1.3..3."""
    return ProblemConfig(dimension=1, s=0.4, omega=UNIT, p=F.bump(1.8, -0.5, (0.3,), 0.4),
                         q=F.affine(1.9, (0.6,)), r=F.affine(1.3, (1.7,)), alpha=0.5, beta=2.0, **kw)


def plane_config(**kw):
    return ProblemConfig(dimension=2, s=0.3, omega=((0.0, 1.0), (0.0, 1.0)), p=F.affine(2.0, (0.3, 0.2)),
                         q=F.constant(2.8), r=F.constant(2.4), alpha=0.5, beta=1.0, **kw)


CONFIGS = {
    "constant": constant_config,
    "linear": linear_config,
    "dip": dip_config,
    "spike": spike_config,
    "growth": growth_config,
    "smooth": smooth_variable_config,
    "rough": rough_variable_config,
    "plane": plane_config,
}


@lru_cache(maxsize=None)
def problem(name: str, resolution=None) -> Problem:
    cfg = CONFIGS[name]() if resolution is None else CONFIGS[name](resolution=resolution)
    return Problem.from_config(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one verdict line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
