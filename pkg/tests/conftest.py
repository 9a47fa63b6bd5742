"""Shared test fixtures and helpers for cbdom tests."""

import json
import subprocess
import sys

import numpy as np
import pytest

from cbdom.dyadic.functions import GridFunction
from cbdom.dyadic.lattice import DyadicLattice


def cbdom(*args, cwd=None):
    """Run a cbdom CLI command and return (output, returncode)."""
    result = subprocess.run(
        [sys.executable, "-m", "cbdom"] + list(args),
        cwd=cwd,
        capture_output=True,
        text=True,
        encoding="utf-8",
        errors="replace",
        timeout=600,
    )
    return result.stdout + result.stderr, result.returncode


def cbdom_json(*args, cwd=None):
    """Run a cbdom command with --json and return (record, returncode)."""
    result = subprocess.run(
        [sys.executable, "-m", "cbdom", "--json"] + list(args),
        cwd=cwd,
        capture_output=True,
        text=True,
        encoding="utf-8",
        errors="replace",
        timeout=600,
    )
    record = json.loads(result.stdout) if result.stdout.strip() else None
    return record, result.returncode


def write_config(path, **fields):
    """Write a config JSON file and return its path as a string."""
    path.write_text(json.dumps(fields))
    return str(path)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def line():
    """A one-dimensional lattice with 64 cells."""
    return DyadicLattice(1, 6)


@pytest.fixture
def square():
    """A two-dimensional lattice with 16 x 16 cells."""
    return DyadicLattice(2, 4)


def random_function(lattice, rng, d=2):
    return GridFunction(lattice, rng.normal(size=(lattice.n_cells, d)))
