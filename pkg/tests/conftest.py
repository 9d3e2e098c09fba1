from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from bikerebalance.cli import bundled
from bikerebalance.distance import load_matrix, read_stations
from bikerebalance.model import DistanceMatrix, NetworkState, Station, default_truck_spec

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def stations():
    return read_stations(bundled("stations.csv"))


@pytest.fixture(scope="session")
def matrix():
    return load_matrix(bundled("matrix.txt"))


@pytest.fixture(scope="session")
def spec():
    return default_truck_spec()


def tiny_stations(n: int, capacity: int = 60):
    return [Station(i, f"s{i}", 139.74 + 0.001 * i, 35.66, capacity) for i in range(n)]


def _split(rng, total: int, parts: int):
    cuts = sorted(rng.choice(np.arange(1, total), parts - 1, replace=False)) if parts > 1 else []
    bounds = [0, *cuts, total]
    return [int(bounds[k + 1] - bounds[k]) for k in range(parts)]


def random_instance(rng: np.random.Generator, n: int, capacity: int = 38):
    """Tiny asymmetric instance whose surplus exactly matches its deficit and fits one truck."""
    xy = rng.uniform(0, 3000, size=(n, 2))
    diff = xy[:, None, :] - xy[None, :, :]
    d = np.hypot(diff[..., 0], diff[..., 1]) * rng.uniform(1.2, 1.6, size=(n, n))
    np.fill_diagonal(d, 0)
    d = np.round(d, 1)

    nz = int(rng.integers(max(2, n - 1), n + 1))
    ids = rng.permutation(n)[:nz]
    k = int(rng.integers(1, nz))
    lo, hi = max(k, nz - k), min(capacity, 6 * min(k, nz - k))
    total = int(rng.integers(lo, hi + 1)) if lo <= hi else lo
    demand = [0] * n
    for i, v in zip(ids[:k], _split(rng, total, k)):
        demand[i] = v
    for i, v in zip(ids[k:], _split(rng, total, nz - k)):
        demand[i] = -v
    state = NetworkState([40 + x for x in demand], [40] * n)
    return state, DistanceMatrix(d)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
