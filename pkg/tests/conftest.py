"""
Test fixtures for the steiner-forest test suite.

This module provides pytest fixtures that are shared across multiple test files:
the worked gadget instances from tests/data, random instance factories and a
temporary directory.
"""
import shutil
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Callable, Generator

import pytest

from pipeline.instance import GeneratorParams, Instance, generate_random, parse_instance

DATA_DIR = Path(__file__).parent / "data"

# Vertex ids of the deactivation example in tests/data/deactivation.stpf.
A1, A2, A3, B1, B2, B3 = 1, 2, 3, 4, 5, 6


@pytest.fixture
def temp_test_dir() -> Generator[Path, None, None]:
    """
    Create a temporary directory for test outputs.

    Yields:
        Path to temporary directory
    """
    temp_dir = Path(tempfile.mkdtemp(prefix="steiner_test_"))
    yield temp_dir
    if temp_dir.exists():
        shutil.rmtree(temp_dir, ignore_errors=True)


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


def load(name: str) -> Instance:
    return parse_instance((DATA_DIR / name).read_text())


@pytest.fixture
def matching_k3() -> Instance:
    """
    Matching gadget with k = 3.

    s = 1 and t = 2 are joined by a cost-2 edge and by the path
    s-b1-b2-b3-t of unit edges; every a_i hangs off b_i by a unit edge.
    """
    return load("matching_k3.stpf")


@pytest.fixture
def matching_k10() -> Instance:
    return load("matching_k10.stpf")


@pytest.fixture
def deactivation() -> Instance:
    """Path a1-a2-b2-a3-b1-b3 with costs 3, 2, 3, 100, 1 and demands (a_i, b_i)."""
    return load("deactivation.stpf")


@pytest.fixture
def single_edge() -> Instance:
    return load("single_edge.stpf")


@pytest.fixture
def epsilon() -> Fraction:
    return Fraction(83, 10000)


@pytest.fixture
def random_instance() -> Callable[..., Instance]:
    """
    Factory for deterministic random instances.

    Example:
        >>> inst = random_instance(seed=3, n=8, demands=3)
    """

    def make(seed: int, n: int = 8, density: float = 0.35, demands: int = 3, metric: bool = False) -> Instance:
        params = GeneratorParams(n=n, edge_density=density, demand_count=demands, max_cost=6, metric=metric)
        return generate_random(params, seed)

    return make
