"""Discrete normalized infinity-Laplacian operators and monotone solvers.

The normalized operator is built from the asymmetric slope operators

    S+_eps u(x) = max over the closed forward eps-ball of (u(y) - u(x)) / eps,
    S-_eps u(x) = max over the closed backward eps-ball of (u(x) - u(y)) / eps,

as (S+ - S-) / eps, so subsolutions have nonnegative operator.  The Dirichlet
solver iterates the monotone midpoint update

    u(x) <- 1/2 (max over B+_x(eps) of u + min over B-_x(eps) of u)
            - eps^2/2 * g(u(x))

with g evaluated at the previous iterate (explicit absorption), optionally
damped, in Gauss-Seidel (default) or Jacobi sweeps.  An obstacle variant clips
each update from above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numba import njit

from .absorption import Absorption
from .errors import ConfigError, DomainError, InputError
from .quasimetric import NodeId, QuasiMetricSpace

# ---------------------------------------------------------------------------
# grid functions
# ---------------------------------------------------------------------------


@dataclass
class GridFunction:
    """Real node values together with a boundary mask.

    Boundary nodes hold their prescribed values exactly; solver sweeps only
    touch interior (non-boundary) nodes.
    """

    space: QuasiMetricSpace
    values: np.ndarray
    boundary_mask: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.boundary_mask = np.asarray(self.boundary_mask, dtype=bool)
        if self.values.shape != (self.space.n,) or self.boundary_mask.shape != (self.space.n,):
            raise InputError("values and boundary_mask must have one entry per node")

    @classmethod
    def constant(cls, space: QuasiMetricSpace, value: float, boundary: Iterable[NodeId] = ()) -> "GridFunction":
        mask = np.zeros(space.n, dtype=bool)
        mask[space.indices(boundary)] = True
        return cls(space, np.full(space.n, float(value)), mask)

    @classmethod
    def from_boundary(
        cls,
        space: QuasiMetricSpace,
        boundary: Iterable[NodeId],
        boundary_values,
        fill: float | None = None,
    ) -> "GridFunction":
        idx = space.indices(boundary)
        if not idx:
            raise InputError("boundary set must be nonempty")
        bvals = np.asarray(boundary_values, dtype=float)
        if bvals.ndim == 0:
            bvals = np.full(len(idx), float(bvals))
        if bvals.shape != (len(idx),):
            raise InputError("boundary_values must match the boundary set")
        mask = np.zeros(space.n, dtype=bool)
        mask[idx] = True
        values = np.full(space.n, float(bvals.min() if fill is None else fill))
        values[idx] = bvals
        return cls(space, values, mask)

    @property
    def boundary_values(self) -> np.ndarray:
        return self.values[self.boundary_mask]

    def interior_indices(self) -> np.ndarray:
        return np.nonzero(~self.boundary_mask)[0]

    def value(self, node: NodeId) -> float:
        return float(self.values[self.space.index(node)])

    def copy(self) -> "GridFunction":
        return GridFunction(self.space, self.values.copy(), self.boundary_mask.copy())


# ---------------------------------------------------------------------------
# scheme configuration and state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SchemeConfig:
    """Parameters of the monotone fixed-point scheme.

    epsilon defaults to the maximal edge weight (closed balls then contain one
    graph hop at least).  sweep_order, when given, is a permutation of node
    indices; boundary nodes in the order are skipped.
    """

    epsilon: float | None = None
    tol: float = 1e-10
    max_iter: int = 1_000_000
    sweep_order: np.ndarray | None = None
    damping: float = 1.0
    mode: str = "gauss-seidel"
    record_trace: bool = True

    def __post_init__(self):
        if not (0.0 < self.damping <= 1.0):
            raise ConfigError("scheme.damping", "must lie in (0, 1]")
        if self.mode not in ("gauss-seidel", "jacobi"):
            raise ConfigError("scheme.mode", "must be 'gauss-seidel' or 'jacobi'")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ConfigError("scheme.epsilon", "must be positive")
        if not self.tol > 0:
            raise ConfigError("scheme.tol", "must be positive")


@dataclass
class SchemeState:
    """Solver iterate plus convergence diagnostics."""

    u: GridFunction
    iterations: int
    residual: float
    converged: bool
    epsilon: float
    trace: np.ndarray | None = None
    diverged: bool = False


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _g_eval(kind, p1, p2, xs, ys, s):
    if kind == 0:
        return 0.0
    if kind == 1:
        return p1
    if kind == 2:
        if s <= 0.0:
            return 0.0
        return p1 * s ** p2
    # table with clamped linear interpolation
    if s <= xs[0]:
        return ys[0]
    if s >= xs[-1]:
        return ys[-1]
    lo = 0
    hi = xs.shape[0] - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xs[mid] <= s:
            lo = mid
        else:
            hi = mid
    t = (s - xs[lo]) / (xs[lo + 1] - xs[lo])
    return ys[lo] + t * (ys[lo + 1] - ys[lo])


@njit(cache=True)
def _gs_sweep(values, order, interior, fip, fidx, bip, bidx, eps, damping,
              gkind, gp1, gp2, gxs, gys, has_obstacle, obstacle):
    maxd = 0.0
    for oi in range(order.shape[0]):
        x = order[oi]
        if not interior[x]:
            continue
        mx = -1e300
        for k in range(fip[x], fip[x + 1]):
            v = values[fidx[k]]
            if v > mx:
                mx = v
        mn = 1e300
        for k in range(bip[x], bip[x + 1]):
            v = values[bidx[k]]
            if v < mn:
                mn = v
        new = 0.5 * (mx + mn) - 0.5 * eps * eps * _g_eval(gkind, gp1, gp2, gxs, gys, values[x])
        new = values[x] + damping * (new - values[x])
        if has_obstacle and new > obstacle[x]:
            new = obstacle[x]
        d = abs(new - values[x])
        if d > maxd:
            maxd = d
        values[x] = new
    return maxd


def _absorption_params(g: Absorption | None):
    dummy = np.zeros(2)
    if g is None or g.kind == "zero":
        return 0, 0.0, 0.0, dummy, dummy
    if g.kind == "constant":
        return 1, float(g.c), 0.0, dummy, dummy
    if g.kind == "power":
        return 2, float(g.lam), float(g.theta), dummy, dummy
    return 3, 0.0, 0.0, np.asarray(g.xs, dtype=float), np.asarray(g.ys, dtype=float)


# ---------------------------------------------------------------------------
# slope operators
# ---------------------------------------------------------------------------


def _ball_max(values: np.ndarray, indptr: np.ndarray, indices: np.ndarray) -> np.ndarray:
    return np.maximum.reduceat(values[indices], indptr[:-1])


def _ball_min(values: np.ndarray, indptr: np.ndarray, indices: np.ndarray) -> np.ndarray:
    return np.minimum.reduceat(values[indices], indptr[:-1])


def _resolve_epsilon(space: QuasiMetricSpace, epsilon: float | None) -> float:
    return space.max_edge_weight if epsilon is None else float(epsilon)


def _check_balls_nonempty(space: QuasiMetricSpace, eps: float, interior: np.ndarray):
    fip, fidx = space.ball_csr(eps, "forward")
    bip, bidx = space.ball_csr(eps, "backward")
    fsize = np.diff(fip)
    bsize = np.diff(bip)
    bad = interior & ((fsize < 2) | (bsize < 2))
    if bad.any():
        node = space.node_ids[int(np.nonzero(bad)[0][0])]
        raise ConfigError("scheme.epsilon", f"empty eps-ball at interior node {node!r} (epsilon too small)")


def slope_plus(u: GridFunction, x: NodeId, epsilon: float | None = None) -> float:
    """S+_eps u(x): exact maximum of (u(y) - u(x)) / eps over the closed
    forward eps-ball; argmax ties resolved by smallest node index."""
    space = u.space
    eps = _resolve_epsilon(space, epsilon)
    i = space.index(x)
    fip, fidx = space.ball_csr(eps, "forward")
    members = fidx[fip[i]:fip[i + 1]]
    if members.size == 0:
        raise ConfigError("scheme.epsilon", "empty forward ball")
    return float((u.values[members] - u.values[i]).max() / eps)


def slope_minus(u: GridFunction, x: NodeId, epsilon: float | None = None) -> float:
    """S-_eps u(x): exact maximum of (u(x) - u(y)) / eps over the closed
    backward eps-ball."""
    space = u.space
    eps = _resolve_epsilon(space, epsilon)
    i = space.index(x)
    bip, bidx = space.ball_csr(eps, "backward")
    members = bidx[bip[i]:bip[i + 1]]
    if members.size == 0:
        raise ConfigError("scheme.epsilon", "empty backward ball")
    return float((u.values[i] - u.values[members]).max() / eps)


def discrete_operator(u: GridFunction, x: NodeId, epsilon: float | None = None) -> float:
    """(S+_eps u(x) - S-_eps u(x)) / eps; subsolutions have nonnegative value."""
    eps = _resolve_epsilon(u.space, epsilon)
    return (slope_plus(u, x, eps) - slope_minus(u, x, eps)) / eps


def operator_field(u: GridFunction, epsilon: float | None = None) -> np.ndarray:
    """discrete_operator at every node, vectorized."""
    space = u.space
    eps = _resolve_epsilon(space, epsilon)
    fip, fidx = space.ball_csr(eps, "forward")
    bip, bidx = space.ball_csr(eps, "backward")
    sp = (_ball_max(u.values, fip, fidx) - u.values) / eps
    sm = (u.values - _ball_min(u.values, bip, bidx)) / eps
    return (sp - sm) / eps


# ---------------------------------------------------------------------------
# Dirichlet and obstacle solvers
# ---------------------------------------------------------------------------


def solve_dirichlet(
    space: QuasiMetricSpace,
    boundary: GridFunction,
    g: Absorption | None = None,
    config: SchemeConfig | None = None,
) -> SchemeState:
    """Monotone fixed-point solve of the discrete Dirichlet problem.

    `boundary` provides the mask and prescribed values; interior values of the
    input are ignored and the iteration starts from the constant min of the
    boundary data (a subsolution when g >= 0).  Returns a diagnostic state
    with converged=False instead of raising on non-convergence.
    """
    return _solve(space, boundary, g, config, obstacle=None)


def solve_obstacle(
    space: QuasiMetricSpace,
    boundary: GridFunction,
    g: Absorption | None,
    obstacle: GridFunction,
    config: SchemeConfig | None = None,
) -> SchemeState:
    """Dirichlet update followed by clipping u <- min(u, obstacle); the fixed
    point is the largest sub-fixed-point below the obstacle."""
    obs = np.asarray(obstacle.values, dtype=float)
    bidx = np.nonzero(boundary.boundary_mask)[0]
    if np.any(obs[bidx] < boundary.values[bidx] - 1e-12):
        raise InputError("obstacle must dominate the boundary data where both are defined")
    return _solve(space, boundary, g, config, obstacle=obs)


def _solve(space, boundary: GridFunction, g, config, obstacle) -> SchemeState:
    if config is None:
        config = SchemeConfig()
    if boundary.space is not space:
        raise InputError("boundary grid function must live on the given space")
    mask = boundary.boundary_mask
    if not mask.any():
        raise InputError("boundary mask must be nonempty")
    interior = ~mask
    if not interior.any():
        raise InputError("empty interior: nothing to solve")

    eps = _resolve_epsilon(space, config.epsilon)
    _check_balls_nonempty(space, eps, interior)
    fip, fidx = space.ball_csr(eps, "forward")
    bip, bidx = space.ball_csr(eps, "backward")

    zeta = boundary.values[mask]
    zmin, zmax = float(zeta.min()), float(zeta.max())
    u = boundary.values.copy()
    u[interior] = zmin
    if obstacle is not None:
        np.minimum(u, obstacle, out=u)
        u[mask] = boundary.values[mask]

    if config.sweep_order is None:
        order = np.arange(space.n, dtype=np.int64)
    else:
        order = np.asarray(config.sweep_order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(space.n)):
            raise ConfigError("scheme.sweep_order", "must be a permutation of all node indices")

    gkind, gp1, gp2, gxs, gys = _absorption_params(g)
    has_obs = obstacle is not None
    obs = obstacle if has_obs else np.zeros(1)

    # divergence guard: a scaled envelope of [min zeta - 1, max zeta + 1];
    # absorption can legitimately pull the solution ~ max|g| * diam^2 / 8
    # below the data, so the envelope includes that dip (diam <= n * eps)
    if g is not None:
        guard = 1.0 + g.abs_integral(zmin, zmax)
        g_max = float(np.max(np.abs(g(np.linspace(zmin - 1.0, zmax + 1.0, 257)))))
    else:
        guard = 1.0
        g_max = 0.0
    dip = 0.125 * g_max * (eps * space.n) ** 2
    guard_bound = (max(abs(zmin - 1.0), abs(zmax + 1.0)) + dip) * guard

    trace: list[float] = []
    converged = False
    diverged = False
    it = 0
    residual = math.inf
    while it < config.max_iter:
        it += 1
        if config.mode == "gauss-seidel":
            residual = float(
                _gs_sweep(u, order, interior, fip, fidx, bip, bidx, eps, config.damping,
                          gkind, gp1, gp2, gxs, gys, has_obs, obs)
            )
        else:
            fmax = _ball_max(u, fip, fidx)
            bmin = _ball_min(u, bip, bidx)
            gvals = g(u) if g is not None else 0.0
            new = 0.5 * (fmax + bmin) - 0.5 * eps * eps * gvals
            new = u + config.damping * (new - u)
            if has_obs:
                np.minimum(new, obs, out=new)
            new[mask] = boundary.values[mask]
            residual = float(np.abs(new - u)[interior].max())
            u = new
        if config.record_trace:
            trace.append(residual)
        if residual <= config.tol:
            converged = True
            break
        if np.abs(u[interior]).max() > guard_bound:
            diverged = True
            break

    gf = GridFunction(space, u, mask.copy())
    return SchemeState(
        u=gf,
        iterations=it,
        residual=residual,
        converged=converged,
        epsilon=eps,
        trace=np.asarray(trace) if config.record_trace else None,
        diverged=diverged,
    )


# ---------------------------------------------------------------------------
# sup/inf convolutions and erosions
# ---------------------------------------------------------------------------


def erode_mask(space: QuasiMetricSpace, domain: np.ndarray, eps: float, direction: str) -> np.ndarray:
    """Nodes of `domain` whose closed eps-ball (in the given direction) stays in
    `domain`."""
    indptr, indices = space.ball_csr(eps, direction)
    inside = domain[indices]
    ok = np.logical_and.reduceat(inside, indptr[:-1])
    return domain & ok


def sup_convolution(u: GridFunction, epsilon: float, direction: str = "forward") -> GridFunction:
    """Ball-wise max (forward) or min (backward) regularization.

    The result is defined on the erosion of the interior domain; outside the
    erosion the original values are kept and the node is marked as boundary in
    the returned grid function.
    """
    space = u.space
    eps = float(epsilon)
    domain = ~u.boundary_mask
    eroded = erode_mask(space, domain, eps, direction)
    if not eroded.any():
        raise DomainError("empty eroded domain for the given epsilon")
    indptr, indices = space.ball_csr(eps, direction)
    if direction == "forward":
        conv = _ball_max(u.values, indptr, indices)
    elif direction == "backward":
        conv = _ball_min(u.values, indptr, indices)
    else:
        raise InputError("direction must be 'forward' or 'backward'")
    values = np.where(eroded, conv, u.values)
    return GridFunction(space, values, ~eroded)


# ---------------------------------------------------------------------------
# eikonal residual
# ---------------------------------------------------------------------------


def eikonal_residual(u: GridFunction, space: QuasiMetricSpace, G, side: str = "forward") -> np.ndarray:
    """Per-node residual G(u(x)) - localslope(u, x) of the discrete eikonal
    inequality.

    The forward local slope is the max over out-edges of (u(y) - u(x)) / w(x,y);
    the backward variant uses in-edges with their weights.  u is accepted as a
    discrete subsolution when the residual is <= tol at every interior node.
    Nodes without edges in the chosen direction get residual +inf.
    """
    vals = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    if side == "forward":
        indptr, indices, weights = space.out_indptr, space.out_indices, space.out_weights
    elif side == "backward":
        indptr, indices, weights = space.in_indptr, space.in_indices, space.in_weights
    else:
        raise InputError("side must be 'forward' or 'backward'")
    slopes = np.full(space.n, -np.inf)
    nonempty = np.diff(indptr) > 0
    if indices.size:
        edge_slopes = (vals[indices] - np.repeat(vals, np.diff(indptr))) / weights
        seg = np.maximum.reduceat(edge_slopes, indptr[:-1].clip(max=indices.size - 1))
        slopes[nonempty] = seg[nonempty]
    gu = np.asarray([G(v) for v in vals], dtype=float) if callable(G) else np.full(space.n, float(G))
    return gu - slopes
