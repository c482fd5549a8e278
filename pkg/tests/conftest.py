"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the production code paths: distances are
re-derived by exhaustive simple-path enumeration, Lipschitz constants by raw
pair scans, and fixed points by direct value iteration in numpy.
"""

import numpy as np
import pytest

from infpot import QuasiMetricSpace, RandersNorm, grid_space


@pytest.fixture
def two_node_space():
    """a -> b with weight 3, b -> a with weight 5."""
    return QuasiMetricSpace(["a", "b"], [("a", "b", 3.0), ("b", "a", 5.0)])


@pytest.fixture
def unit_grid_5x5():
    return grid_space(RandersNorm.euclidean(2), [(-2, 2), (-2, 2)], 1.0)


def enumerate_path_distance(space: QuasiMetricSpace, src, dst) -> float:
    """Exhaustive minimum over all simple directed paths from src to dst.

    Pure DFS with a visited set; prunes only branches already longer than the
    best path found, which does not change exactness.
    """
    s, t = space.index(src), space.index(dst)
    best = [np.inf]
    visited = [False] * space.n

    def dfs(x, acc):
        if acc >= best[0]:
            return
        if x == t:
            best[0] = acc
            return
        visited[x] = True
        ys, ws = space.out_edges(x)
        for y, w in zip(ys, ws):
            if not visited[y]:
                dfs(int(y), acc + float(w))
        visited[x] = False

    dfs(s, 0.0)
    return best[0]


def brute_force_lipschitz(values, ids, space) -> float:
    """Max over every ordered pair of (u(y)-u(x))/d(x,y), distances from
    per-source scans of enumerate-all-edges relaxation (Bellman-Ford)."""
    idx = [space.index(v) for v in ids]
    best = 0.0
    for i in idx:
        d = bellman_ford(space, i)
        for j in idx:
            if i == j:
                continue
            best = max(best, (values[j] - values[i]) / d[j])
    return best


def bellman_ford(space: QuasiMetricSpace, src: int) -> np.ndarray:
    """n-1 rounds of full edge relaxation; independent of the heap-based
    production path."""
    d = np.full(space.n, np.inf)
    d[src] = 0.0
    edges = space.edge_list()
    for _ in range(space.n - 1):
        changed = False
        for x, y, w in edges:
            if d[x] + w < d[y]:
                d[y] = d[x] + w
                changed = True
        if not changed:
            break
    return d


def value_iteration_fixed_point(space, boundary_mask, values0, eps, g=None, obstacle=None,
                                tol=1e-13, max_iter=500_000):
    """Direct Jacobi value iteration of the midpoint update, written against
    raw ball scans; the brute-force fixed-point oracle."""
    fip, fidx = space.ball_csr(eps, "forward")
    bip, bidx = space.ball_csr(eps, "backward")
    u = values0.copy()
    interior = ~boundary_mask
    for _ in range(max_iter):
        new = u.copy()
        for x in np.nonzero(interior)[0]:
            fwd = u[fidx[fip[x]:fip[x + 1]]]
            bwd = u[bidx[bip[x]:bip[x + 1]]]
            val = 0.5 * (fwd.max() + bwd.min())
            if g is not None:
                val -= 0.5 * eps * eps * g(u[x])
            if obstacle is not None:
                val = min(val, obstacle[x])
            new[x] = val
        delta = np.abs(new - u).max()
        u = new
        if delta <= tol:
            break
    return u


def random_connected_digraph(rng, n, edge_prob=0.2, w_lo=0.5, w_hi=2.0):
    perm = rng.permutation(n)
    edges = []
    seen = set()
    for i in range(n):
        a, b = int(perm[i]), int(perm[(i + 1) % n])
        edges.append((a, b, float(rng.uniform(w_lo, w_hi))))
        seen.add((a, b))
    for a in range(n):
        for b in range(n):
            if a != b and (a, b) not in seen and rng.random() < edge_prob:
                edges.append((a, b, float(rng.uniform(w_lo, w_hi))))
                seen.add((a, b))
    return QuasiMetricSpace(list(range(n)), edges)
