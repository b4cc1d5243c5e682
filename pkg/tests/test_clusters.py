"""Cluster counting: periodic radius graph connected components."""

import numpy as np
import pytest

from aggrsim.errors import ConfigError
from aggrsim.geometry import TorusGeometry
from aggrsim.neighbors import cluster_count

GEOM1 = TorusGeometry(dimension=1, side=1.0)
GEOM2 = TorusGeometry(dimension=2, side=1.0)


def _bfs_oracle(pos, geom, radius):
    """Independent breadth-first component count over the radius graph."""
    n = pos.shape[0]
    delta = pos[:, None, :] - pos[None, :, :]
    delta -= geom.side * np.floor(delta / geom.side + 0.5)
    adj = (delta**2).sum(axis=2) <= radius**2
    seen = np.zeros(n, dtype=bool)
    sizes = []
    for s in range(n):
        if seen[s]:
            continue
        queue = [s]
        seen[s] = True
        size = 0
        while queue:
            i = queue.pop()
            size += 1
            for j in np.nonzero(adj[i] & ~seen)[0]:
                seen[j] = True
                queue.append(int(j))
        sizes.append(size)
    return len(sizes), np.sort(np.array(sizes, dtype=np.int64))[::-1]


def test_two_groups():
    pos = np.array([[0.10, 0.5], [0.13, 0.5], [0.60, 0.5], [0.62, 0.5], [0.64, 0.5]])
    count, sizes = cluster_count(pos, GEOM2, 0.05)
    assert count == 2
    assert np.array_equal(sizes, [3, 2])


def test_chain_spans_one_cluster():
    # 0.9 R spacing chains everyone together
    pos = (np.arange(10) * 0.045).reshape(-1, 1) % 1.0
    count, sizes = cluster_count(pos, GEOM1, 0.05)
    assert count == 1 and sizes[0] == 10


def test_chain_across_seam():
    pos = np.array([[0.97], [0.995], [0.02]])
    count, sizes = cluster_count(pos, GEOM1, 0.03)
    assert count == 1 and sizes[0] == 3


def test_exact_radius_is_linked():
    pos = np.array([[0.25], [0.5]])  # distance exactly 0.25, representable
    count, _ = cluster_count(pos, GEOM1, 0.25)
    assert count == 1
    count, _ = cluster_count(pos, GEOM1, 0.2499999)
    assert count == 2


def test_singletons():
    pos = np.array([[0.1, 0.1], [0.5, 0.5], [0.9, 0.9]])
    count, sizes = cluster_count(pos, GEOM2, 0.01)
    assert count == 3 and np.array_equal(sizes, [1, 1, 1])


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("geom,radius", [(GEOM1, 0.02), (GEOM2, 0.06), (GEOM2, 0.45)])
def test_matches_bfs_oracle(seed, geom, radius):
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0.0, geom.side, size=(80, geom.dimension))
    count, sizes = cluster_count(pos, geom, radius)
    oracle_count, oracle_sizes = _bfs_oracle(pos, geom, radius)
    assert count == oracle_count
    assert np.array_equal(sizes, oracle_sizes)


def test_empty_and_validation():
    count, sizes = cluster_count(np.zeros((0, 1)), GEOM1, 0.1)
    assert count == 0 and sizes.size == 0
    with pytest.raises(ConfigError):
        cluster_count(np.array([[0.1]]), GEOM1, 0.0)
    with pytest.raises(ConfigError):
        cluster_count(np.array([[0.1]]), GEOM1, 1.5)
