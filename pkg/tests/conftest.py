import os
from pathlib import Path

import numpy as np
import pytest

from mgclp.instance_io import Instance, RawGraph

DATA_DIRS = [os.environ.get("MGCLP_PMED_DIR"), str(Path(__file__).parent / "data" / "orlib")]


def random_instance(rng, n_max=8, m_max=8, k_max=3, theta=None, binary_share=0.3,
                    n_min=1, m_min=1, k_min=1):
    """Random coverage instance with a mix of full, partial and zero entries."""
    n = int(rng.integers(n_min, n_max + 1))
    m = int(rng.integers(m_min, m_max + 1))
    K = int(rng.integers(k_min, k_max + 1))
    f = rng.random((n, m))
    f[rng.random((n, m)) < 0.35] = 0.0
    f[rng.random((n, m)) < binary_share] = 1.0
    w = rng.integers(0, 5, m).astype(float)
    if theta is None:
        theta = float(rng.choice([0.0, 0.2, 0.5, 0.8, 1.0]))
    return Instance(f, w, K, theta)


def synthetic_graph(n, n_edges, p, seed=0):
    """Connected random graph in the pmed layout (integer costs 1..100)."""
    rng = np.random.default_rng(seed)
    edges = set()
    for v in range(1, n):
        edges.add((int(rng.integers(0, v)), v))
    while len(edges) < n_edges:
        a, b = sorted(int(t) for t in rng.integers(0, n, 2))
        if a != b:
            edges.add((a, b))
    return RawGraph(n, tuple((a + 1, b + 1, float(rng.integers(1, 101)))
                             for a, b in sorted(edges)), p)


def pmed_path(k: int):
    for d in DATA_DIRS:
        if d and (Path(d) / f"pmed{k}.txt").is_file():
            return Path(d) / f"pmed{k}.txt"
    return None


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
