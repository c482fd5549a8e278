"""Finite quasi-metric spaces.

A space is a finite directed graph with positive edge weights; the induced
asymmetric distance d(x, y) is the directed shortest-path length.  This module
provides the distance machinery (multi-source fields, balls, spheres),
asymmetric Lipschitz constants, reversibility and eccentricity measurements,
and the Randers family of analytic asymmetric norms used to build anisotropic
grid spaces.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from .errors import DomainError, InputError

NodeId = Hashable

#: 2D lattice stencils; every offset is present together with its negation.
STENCIL_4 = ((1, 0), (-1, 0), (0, 1), (0, -1))
STENCIL_8 = STENCIL_4 + ((1, 1), (-1, -1), (1, -1), (-1, 1))
STENCIL_1D = ((1,), (-1,))


class QuasiMetricSpace:
    """Finite directed weighted graph carrying an asymmetric distance.

    Nodes are identified by arbitrary hashable ids; internally they are mapped
    to contiguous indices in the order of the provided node list, and every
    deterministic tie-break in the package refers to that order.  Edge lists
    are stored in CSR form, with the reverse adjacency derived as the exact
    transpose.  Instances are immutable after construction.
    """

    def __init__(
        self,
        nodes: Sequence[NodeId],
        edges: Iterable[tuple[NodeId, NodeId, float]],
        coords: np.ndarray | None = None,
    ):
        self.node_ids: tuple[NodeId, ...] = tuple(nodes)
        if len(set(self.node_ids)) != len(self.node_ids):
            raise InputError("duplicate node ids")
        if not self.node_ids:
            raise InputError("empty node list")
        self._index: dict[NodeId, int] = {v: i for i, v in enumerate(self.node_ids)}
        n = len(self.node_ids)

        adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for tail, head, w in edges:
            if tail not in self._index or head not in self._index:
                raise InputError(f"edge ({tail!r}, {head!r}) references unknown node")
            w = float(w)
            if not (w > 0.0 and math.isfinite(w)):
                raise InputError(f"edge ({tail!r}, {head!r}) has non-positive or non-finite weight {w}")
            adj[self._index[tail]].append((self._index[head], w))
        for lst in adj:
            lst.sort()

        self.out_indptr, self.out_indices, self.out_weights = _csr_from_lists(adj)
        radj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for x in range(n):
            for y, w in adj[x]:
                radj[y].append((x, w))
        for lst in radj:
            lst.sort()
        self.in_indptr, self.in_indices, self.in_weights = _csr_from_lists(radj)

        if coords is not None:
            coords = np.asarray(coords, dtype=float)
            if coords.shape[0] != n:
                raise InputError("coords must have one row per node")
        self.coords = coords

        if not self._undirected_connected():
            raise InputError("graph must be connected when edge directions are ignored")

        self.max_edge_weight: float = float(self.out_weights.max()) if self.out_weights.size else 0.0
        self.min_edge_weight: float = float(self.out_weights.min()) if self.out_weights.size else 0.0
        self._ball_cache: dict[tuple[float, str], tuple[np.ndarray, np.ndarray]] = {}

    # -- basic accessors ---------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.node_ids)

    def __contains__(self, node: NodeId) -> bool:
        return node in self._index

    def index(self, node: NodeId) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise InputError(f"unknown node id {node!r}") from None

    def indices(self, nodes: Iterable[NodeId]) -> list[int]:
        return [self.index(v) for v in nodes]

    def out_edges(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        s, e = self.out_indptr[i], self.out_indptr[i + 1]
        return self.out_indices[s:e], self.out_weights[s:e]

    def in_edges(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        s, e = self.in_indptr[i], self.in_indptr[i + 1]
        return self.in_indices[s:e], self.in_weights[s:e]

    def edge_list(self) -> list[tuple[int, int, float]]:
        out = []
        for x in range(self.n):
            ys, ws = self.out_edges(x)
            out.extend((x, int(y), float(w)) for y, w in zip(ys, ws))
        return out

    def transposed(self) -> "QuasiMetricSpace":
        """Space with every edge reversed (same nodes, same coords)."""
        edges = [(self.node_ids[y], self.node_ids[x], w) for x, y, w in self.edge_list()]
        return QuasiMetricSpace(self.node_ids, edges, self.coords)

    def _undirected_connected(self) -> bool:
        n = self.n
        seen = np.zeros(n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            x = stack.pop()
            for y in itertools.chain(self.out_edges(x)[0], self.in_edges(x)[0]):
                if not seen[y]:
                    seen[y] = True
                    stack.append(int(y))
        return bool(seen.all())

    # -- metric balls --------------------------------------------------------

    def ball_csr(self, eps: float, direction: str) -> tuple[np.ndarray, np.ndarray]:
        """Closed metric eps-balls of every node, as a CSR (indptr, indices) pair.

        direction "forward" gives B+_x(eps) = {y : d(x,y) <= eps}; "backward"
        gives B-_x(eps) = {y : d(y,x) <= eps}.  Results are cached per (eps,
        direction); membership uses an absolute 1e-12 tolerance on the radius.
        """
        key = (float(eps), direction)
        cached = self._ball_cache.get(key)
        if cached is not None:
            return cached
        if direction == "forward":
            indptr, indices, weights = self.out_indptr, self.out_indices, self.out_weights
        elif direction == "backward":
            indptr, indices, weights = self.in_indptr, self.in_indices, self.in_weights
        else:
            raise InputError(f"direction must be 'forward' or 'backward', got {direction!r}")
        ptr = [0]
        members: list[int] = []
        for x in range(self.n):
            ball = _truncated_dijkstra(indptr, indices, weights, x, float(eps))
            members.extend(ball)
            ptr.append(len(members))
        result = (np.asarray(ptr, dtype=np.int64), np.asarray(members, dtype=np.int64))
        self._ball_cache[key] = result
        return result

    # -- i/o -----------------------------------------------------------------

    @classmethod
    def from_edge_lines(cls, text: str) -> "QuasiMetricSpace":
        """Parse the plain-text graph format: one `tail head weight` per line.

        Blank lines and lines starting with '#' are ignored.  Node ids are the
        literal tokens (strings); node order is first appearance.
        """
        nodes: list[str] = []
        seen: set[str] = set()
        edges: list[tuple[str, str, float]] = []
        for ln, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise InputError(f"line {ln}: expected 'tail head weight', got {raw!r}")
            tail, head, wtext = parts
            try:
                w = float(wtext)
            except ValueError:
                raise InputError(f"line {ln}: bad weight {wtext!r}") from None
            for v in (tail, head):
                if v not in seen:
                    seen.add(v)
                    nodes.append(v)
            edges.append((tail, head, w))
        return cls(nodes, edges)


def _csr_from_lists(adj: list[list[tuple[int, float]]]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    indptr = np.zeros(len(adj) + 1, dtype=np.int64)
    for i, lst in enumerate(adj):
        indptr[i + 1] = indptr[i] + len(lst)
    indices = np.empty(indptr[-1], dtype=np.int64)
    weights = np.empty(indptr[-1], dtype=float)
    k = 0
    for lst in adj:
        for y, w in lst:
            indices[k] = y
            weights[k] = w
            k += 1
    return indptr, indices, weights


def _truncated_dijkstra(indptr, indices, weights, src: int, radius: float) -> list[int]:
    dist = {src: 0.0}
    heap = [(0.0, src)]
    out = []
    while heap:
        d, x = heapq.heappop(heap)
        if d > dist.get(x, np.inf):
            continue
        out.append(x)
        for k in range(indptr[x], indptr[x + 1]):
            y = int(indices[k])
            nd = d + weights[k]
            if nd <= radius + 1e-12 and nd < dist.get(y, np.inf) - 1e-15:
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return sorted(set(out))


def _dijkstra(indptr, indices, weights, sources: list[int], n: int) -> np.ndarray:
    """Multi-source label-setting shortest paths; ties resolved by node index."""
    dist = np.full(n, np.inf)
    heap = []
    for s in sources:
        dist[s] = 0.0
        heap.append((0.0, s))
    heapq.heapify(heap)
    done = np.zeros(n, dtype=bool)
    while heap:
        d, x = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        for k in range(indptr[x], indptr[x + 1]):
            y = int(indices[k])
            nd = d + weights[k]
            if nd < dist[y]:
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return dist


# ---------------------------------------------------------------------------
# distance fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistanceField:
    """Per-node distances from (or to) a source set.

    direction "forward" stores value(x) = d(sources, x); "backward" stores
    value(x) = d(x, sources).  Unreachable nodes carry +inf.
    """

    space: QuasiMetricSpace
    sources: tuple[NodeId, ...]
    direction: str
    values: np.ndarray

    def value(self, node: NodeId) -> float:
        return float(self.values[self.space.index(node)])

    def triangle_defect(self) -> float:
        """Worst violation of value(y) <= value(x) + w(x,y) over all edges
        (edges oriented per the field direction); nonpositive means the
        directed triangle inequality holds."""
        sp = self.space
        worst = -np.inf
        if self.direction == "forward":
            items = ((x, y, w) for x, y, w in sp.edge_list())
        else:
            items = ((y, x, w) for x, y, w in sp.edge_list())
        for x, y, w in items:
            a, b = self.values[x], self.values[y]
            if np.isfinite(a):
                worst = max(worst, b - (a + w))
        return float(worst)


def forward_distance(space: QuasiMetricSpace, sources: Iterable[NodeId]) -> DistanceField:
    """Multi-source directed shortest-path distances d(sources, .)."""
    src = tuple(sources)
    if not src:
        raise InputError("sources must be nonempty")
    idx = space.indices(src)
    values = _dijkstra(space.out_indptr, space.out_indices, space.out_weights, idx, space.n)
    return DistanceField(space, src, "forward", values)


def backward_distance(space: QuasiMetricSpace, sources: Iterable[NodeId]) -> DistanceField:
    """Distances towards the sources, d(., sources): forward distances on the
    transposed graph."""
    src = tuple(sources)
    if not src:
        raise InputError("sources must be nonempty")
    idx = space.indices(src)
    values = _dijkstra(space.in_indptr, space.in_indices, space.in_weights, idx, space.n)
    return DistanceField(space, src, "backward", values)


def ball(space: QuasiMetricSpace, center: NodeId, r: float, direction: str = "forward") -> set[NodeId]:
    """Strict metric ball {x : d(center,x) < r} (forward) or {x : d(x,center) < r}."""
    if not r > 0:
        raise InputError("ball radius must be positive")
    f = forward_distance(space, [center]) if direction == "forward" else backward_distance(space, [center])
    return {space.node_ids[i] for i in np.nonzero(f.values < r)[0]}


def sphere(
    space: QuasiMetricSpace,
    center: NodeId,
    r: float,
    direction: str = "forward",
    band: float | None = None,
) -> set[NodeId]:
    """Discrete metric sphere: the tolerance band {x : |d - r| <= band}.

    Lattice distances rarely hit r exactly, so the sphere is a band; the
    default band is the maximal edge weight.
    """
    if not r > 0:
        raise InputError("sphere radius must be positive")
    if band is None:
        band = space.max_edge_weight
    f = forward_distance(space, [center]) if direction == "forward" else backward_distance(space, [center])
    sel = np.abs(f.values - r) <= band + 1e-12
    return {space.node_ids[i] for i in np.nonzero(sel)[0]}


# ---------------------------------------------------------------------------
# Lipschitz constants, reversibility, eccentricity
# ---------------------------------------------------------------------------


def _values_array(u, space: QuasiMetricSpace) -> np.ndarray:
    values = getattr(u, "values", u)
    arr = np.asarray(values, dtype=float)
    if arr.shape != (space.n,):
        raise InputError("value array must have one entry per node")
    return arr


def pairwise_distances(space: QuasiMetricSpace, region: Sequence[NodeId]) -> np.ndarray:
    """Matrix D[i, j] = d(region[i], region[j])."""
    idx = space.indices(region)
    D = np.empty((len(idx), len(idx)))
    for i, x in enumerate(idx):
        dist = _dijkstra(space.out_indptr, space.out_indices, space.out_weights, [x], space.n)
        D[i, :] = dist[idx]
    return D


def lipschitz_constant(u, A: Iterable[NodeId], space: QuasiMetricSpace) -> float:
    """Smallest L with u(y) - u(x) <= L d(x,y) for all ordered pairs in A.

    The orientation is asymmetric: the numerator order matches d(x, y).
    Accepts a raw value array or any object with a `.values` attribute.
    """
    region = list(A)
    if not region:
        raise InputError("A must be nonempty")
    vals = _values_array(u, space)
    idx = space.indices(region)
    if len(region) == 1:
        return 0.0
    D = pairwise_distances(space, region)
    if not np.isfinite(D).all():
        raise DomainError("infinite distance between nodes of A")
    uA = vals[idx]
    diff = uA[None, :] - uA[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = diff / D
    np.fill_diagonal(ratios, -np.inf)
    return float(max(ratios.max(), 0.0))


def reversibility_constant(space: QuasiMetricSpace, region: Iterable[NodeId]) -> float:
    """Smallest alpha >= 1 with d(x,y) <= alpha d(y,x) and d(y,x) <= alpha d(x,y)
    over all ordered pairs in the region."""
    nodes = list(region)
    if len(nodes) < 2:
        return 1.0
    D = pairwise_distances(space, nodes)
    if not np.isfinite(D).all():
        raise DomainError("infinite distance inside the region")
    iu = np.triu_indices(len(nodes), k=1)
    a, b = D[iu], D.T[iu]
    return float(max(np.max(a / b), np.max(b / a), 1.0))


def eccentricity(space: QuasiMetricSpace, z: NodeId, region: Iterable[NodeId]) -> tuple[float, float]:
    """(max d(z,.), max d(.,z)) over the region."""
    nodes = list(region)
    if not nodes:
        raise InputError("region must be nonempty")
    idx = space.indices(nodes)
    fwd = forward_distance(space, [z]).values[idx]
    bwd = backward_distance(space, [z]).values[idx]
    if not (np.isfinite(fwd).all() and np.isfinite(bwd).all()):
        raise DomainError("infinite distance between z and the region")
    return float(fwd.max()), float(bwd.max())


# ---------------------------------------------------------------------------
# Randers norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RandersNorm:
    """Asymmetric norm F(v) = sqrt(v^T A v) + beta . v.

    A must be symmetric positive definite and the drift must satisfy
    sqrt(beta^T A^-1 beta) < 1, which makes F positive away from 0.
    """

    A: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if A.shape[0] != A.shape[1] or A.shape[0] != beta.shape[0]:
            raise InputError("A must be square and match beta's dimension")
        if A.shape[0] > 3:
            raise InputError("RandersNorm supports dimension <= 3")
        if not np.allclose(A, A.T, atol=1e-12):
            raise InputError("A must be symmetric")
        eigs = np.linalg.eigvalsh(A)
        if eigs.min() <= 0:
            raise InputError("A must be positive definite")
        drift = float(beta @ np.linalg.solve(A, beta))
        if not drift < 1.0:
            raise InputError("beta^T A^-1 beta must be < 1 for positivity of F")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "beta", beta)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @classmethod
    def euclidean(cls, dim: int) -> "RandersNorm":
        return cls(np.eye(dim), np.zeros(dim))

    def __call__(self, v) -> float:
        return norm_eval(self, v)

    def reversed(self) -> "RandersNorm":
        """Norm of the reversed structure, v -> F(-v)."""
        return RandersNorm(self.A, -self.beta)


def norm_eval(norm: RandersNorm, v) -> float:
    """F(v) = sqrt(v^T A v) + beta . v; zero iff v = 0."""
    v = np.asarray(v, dtype=float)
    return float(np.sqrt(v @ norm.A @ v) + norm.beta @ v)


def _golden_max(f: Callable[[float], float], a: float, b: float, tol: float = 1e-12) -> tuple[float, float]:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def dual_norm(norm: RandersNorm, xi) -> float:
    """Dual norm F*(xi) = sup_{v != 0} xi.v / F(v).

    Evaluated by dense direction sampling (4096 directions) followed by local
    golden-section refinement; relative accuracy around 1e-6 or better.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape[0] != norm.dim:
        raise InputError("covector dimension mismatch")
    if not np.any(xi):
        return 0.0

    def ratio_vec(v: np.ndarray) -> float:
        return float(xi @ v) / norm_eval(norm, v)

    if norm.dim == 1:
        return max(ratio_vec(np.array([1.0])), ratio_vec(np.array([-1.0])))

    if norm.dim == 2:
        thetas = np.linspace(0.0, 2.0 * math.pi, 4096, endpoint=False)
        vs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
        quad = np.sqrt(np.einsum("ij,jk,ik->i", vs, norm.A, vs))
        vals = (vs @ xi) / (quad + vs @ norm.beta)
        k = int(np.argmax(vals))
        step = 2.0 * math.pi / 4096

        def h(theta: float) -> float:
            return ratio_vec(np.array([math.cos(theta), math.sin(theta)]))

        _, best = _golden_max(h, thetas[k] - step, thetas[k] + step)
        return max(best, float(vals[k]))

    # dim == 3: Fibonacci-sphere sampling, then alternating golden-section
    # refinement of the two spherical angles.
    m = 4096
    i = np.arange(m)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    zc = 1.0 - 2.0 * (i + 0.5) / m
    rc = np.sqrt(1.0 - zc * zc)
    vs = np.stack([rc * np.cos(phi), rc * np.sin(phi), zc], axis=1)
    quad = np.sqrt(np.einsum("ij,jk,ik->i", vs, norm.A, vs))
    vals = (vs @ xi) / (quad + vs @ norm.beta)
    k = int(np.argmax(vals))
    best_v = vs[k]
    theta0 = math.acos(max(-1.0, min(1.0, best_v[2])))
    phi0 = math.atan2(best_v[1], best_v[0])
    spread = 4.0 / math.sqrt(m)

    def on_sphere(theta: float, ph: float) -> np.ndarray:
        return np.array(
            [math.sin(theta) * math.cos(ph), math.sin(theta) * math.sin(ph), math.cos(theta)]
        )

    best = float(vals[k])
    for _ in range(4):
        theta0, _ = _golden_max(lambda t: ratio_vec(on_sphere(t, phi0)), theta0 - spread, theta0 + spread)
        phi0, best = _golden_max(lambda p: ratio_vec(on_sphere(theta0, p)), phi0 - spread, phi0 + spread)
        spread *= 0.25
    return max(best, float(vals[k]))


# ---------------------------------------------------------------------------
# grid spaces
# ---------------------------------------------------------------------------


def grid_space(
    norm: RandersNorm,
    bounds: Sequence[tuple[float, float]],
    h: float,
    stencil: Sequence[Sequence[int]] = STENCIL_4,
    mask: Callable[[np.ndarray], bool] | None = None,
) -> QuasiMetricSpace:
    """Anisotropic lattice space inside a box.

    Nodes are lattice points lo + k*h within the bounds; node ids are the
    integer index tuples k, so the same physical point keeps its id across
    truncations of a common model.  Each stencil offset s yields a directed
    edge x -> x+s with weight F(s*h) evaluated at the step midpoint (norms are
    spatially constant here, so the midpoint rule is exact).  Nodes where
    `mask(coords)` is true are deleted; this is how incomplete-space models
    (deleted points or regions) are built.
    """
    if not h > 0:
        raise InputError("grid spacing h must be positive")
    dim = len(bounds)
    if dim != norm.dim:
        raise InputError("bounds dimension must match the norm dimension")
    offsets = [tuple(int(c) for c in off) for off in stencil]
    if len(offsets) == 0:
        raise InputError("stencil must be nonempty")
    offset_set = set(offsets)
    for off in offsets:
        if len(off) != dim:
            raise InputError("stencil offsets must match the grid dimension")
        if tuple(-c for c in off) not in offset_set:
            raise InputError(f"stencil is not symmetric as a set: missing negation of {off}")
        if all(c == 0 for c in off):
            raise InputError("stencil must not contain the zero offset")

    ranges = []
    for lo, hi in bounds:
        if not hi >= lo:
            raise InputError("invalid bounds: hi < lo")
        k_lo = math.ceil(lo / h - 1e-9)
        k_hi = math.floor(hi / h + 1e-9)
        ranges.append(range(k_lo, k_hi + 1))

    ids: list[tuple[int, ...]] = []
    for k in itertools.product(*ranges):
        coord = np.array(k, dtype=float) * h
        if mask is not None and mask(coord):
            continue
        ids.append(k)
    if not ids:
        raise InputError("empty grid: bounds/mask leave no nodes")

    node_set = set(ids)
    weights = {off: norm_eval(norm, np.array(off, dtype=float) * h) for off in offsets}
    edges = []
    for k in ids:
        for off in offsets:
            q = tuple(a + b for a, b in zip(k, off))
            if q in node_set:
                edges.append((k, q, weights[off]))
    coords = np.array(ids, dtype=float) * h
    return QuasiMetricSpace(ids, edges, coords)
