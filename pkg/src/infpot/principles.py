"""Executable completeness criteria.

Forward completeness of an unbounded model cannot be observed directly on a
finite machine; each criterion here operationalizes one of the equivalent
properties as a finite experiment over an exhaustion family: the 0/1 Dirichlet
dichotomy (probe maxima decay vs. stabilize), maximum principles at infinity
as boundary-gap reports, the sharp power-absorption constant as a reproduction
study, the Lipschitz-infimum / capacity criterion with the explicit candidate
family, the eikonal maximum principle, and a constructive near-maximum point
finder with exhaustively verified certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .absorption import Absorption
from .errors import DomainError, InputError
from .quasimetric import (
    NodeId,
    QuasiMetricSpace,
    RandersNorm,
    STENCIL_4,
    forward_distance,
    grid_space,
    lipschitz_constant,
    pairwise_distances,
)
from .scheme import (
    GridFunction,
    SchemeConfig,
    eikonal_residual,
    operator_field,
    solve_dirichlet,
)

# ---------------------------------------------------------------------------
# exhaustion families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExhaustionFamily:
    """Family of truncations of one model space, with a core ball and a fixed
    probe annulus.

    `build(r)` returns (space, rim ids) where the rim carries the outer
    Dirichlet data of the truncation.  Node ids are lattice index tuples, so
    the core and probe sets are literally the same nodes in every member.
    For bounded (incomplete) models every radius returns the same space and
    rim, which is the metric boundary at finite distance.
    """

    build: Callable[[float], tuple[QuasiMetricSpace, frozenset]]
    origin: NodeId
    core_radius: float
    probe_band: tuple[float, float]
    radii: tuple[float, ...]
    bounded: bool
    label: str = ""


def grid_exhaustion(
    norm: RandersNorm,
    h: float,
    stencil=STENCIL_4,
    radii: Sequence[float] = (5.0, 10.0, 20.0, 40.0),
    core_radius: float = 2.0,
    probe_band: tuple[float, float] = (3.0, 4.0),
) -> ExhaustionFamily:
    """Unbounded lattice model truncated at forward radius r from the origin.

    The rim of a truncation is the band of nodes whose forward distance
    exceeds r - (max edge weight); on a unit grid this is exactly the outer
    distance layer.
    """
    dim = norm.dim
    origin = tuple([0] * dim)

    def build(r: float) -> tuple[QuasiMetricSpace, frozenset]:
        half = r * (1.0 + 1e-9) + h
        box = grid_space(norm, [(-half, half)] * dim, h, stencil)
        rho = forward_distance(box, [origin]).values
        keep = rho <= r + 1e-12
        ids = [box.node_ids[i] for i in np.nonzero(keep)[0]]
        idset = set(ids)
        edges = [
            (box.node_ids[x], box.node_ids[y], w)
            for x, y, w in box.edge_list()
            if box.node_ids[x] in idset and box.node_ids[y] in idset
        ]
        coords = box.coords[keep] if box.coords is not None else None
        space = QuasiMetricSpace(ids, edges, coords)
        rho_t = forward_distance(space, [origin]).values
        rim = frozenset(
            space.node_ids[i] for i in np.nonzero(rho_t > r - space.max_edge_weight + 1e-12)[0]
        )
        return space, rim

    return ExhaustionFamily(build, origin, core_radius, probe_band, tuple(float(r) for r in radii),
                            bounded=False, label="unbounded-grid")


def bounded_incomplete_family(
    norm: RandersNorm,
    h: float,
    extent: float,
    stencil=STENCIL_4,
    radii: Sequence[float] = (5.0, 10.0, 20.0, 40.0),
    core_radius: float = 2.0,
    probe_band: tuple[float, float] = (3.0, 4.0),
    spike: bool = False,
) -> ExhaustionFamily:
    """Bounded incompleteness model: a fixed grid with a deleted outer layer
    (and optionally an inward spike of deleted nodes), identical for every
    truncation radius.  The rim is the set of nodes adjacent to a deleted or
    missing neighbor: the metric boundary at finite distance.
    """
    dim = norm.dim
    origin = tuple([0] * dim)

    def mask(coord: np.ndarray) -> bool:
        if np.max(np.abs(coord)) >= extent - 1e-9:
            return True  # deleted outer layer
        if spike and dim >= 2:
            return bool(coord[1] == 0.0 and coord[0] >= extent / 2.0)
        return False

    space = grid_space(norm, [(-extent, extent)] * dim, h, stencil, mask=mask)
    full_degree = len(tuple(stencil))
    rim = frozenset(
        space.node_ids[x]
        for x in range(space.n)
        if space.out_indptr[x + 1] - space.out_indptr[x] < full_degree
    )

    def build(_r: float) -> tuple[QuasiMetricSpace, frozenset]:
        return space, rim

    return ExhaustionFamily(build, origin, core_radius, probe_band, tuple(float(r) for r in radii),
                            bounded=True, label="bounded-spike" if spike else "bounded-layer")


# ---------------------------------------------------------------------------
# completeness detector
# ---------------------------------------------------------------------------


def detect_completeness(
    family: ExhaustionFamily,
    g: Absorption | None = None,
    config: SchemeConfig | None = None,
    decay_ratio: float = 0.25,
    stability_tol: float = 1e-9,
) -> dict:
    """Solve the 0/1 annulus problems of the exhaustion and classify the probe
    maxima trend.

    For each radius r the Dirichlet problem on the annulus between the core
    ball and the rim is solved with data 0 on the core, 1 on the rim, and
    m(r) = max of the solution over the probe annulus is recorded.  Verdicts:
    COMPLETE-LIKE when the m(r) are strictly decreasing and the last drops
    below decay_ratio times the first; INCOMPLETE-LIKE when they are constant
    within stability_tol; INCONCLUSIVE otherwise.
    """
    if g is not None and not (g.nonnegative_on_range and g.nondecreasing_on_range):
        raise InputError("detector requires g nonnegative and nondecreasing; apply monotone_envelope first")
    probes: list[float] = []
    iterations: list[int] = []
    for r in family.radii:
        space, rim = family.build(r)
        rho = forward_distance(space, [family.origin]).values
        core = rho <= family.core_radius + 1e-12
        rim_idx = np.array(space.indices(rim), dtype=int)
        mask = core.copy()
        mask[rim_idx] = True
        values = np.zeros(space.n)
        values[rim_idx] = 1.0
        values[core] = 0.0
        interior = ~mask
        lo, hi = family.probe_band
        probe = (rho >= lo - 1e-12) & (rho <= hi + 1e-12)
        if not interior.any():
            probes.append(1.0)  # degenerate truncation: boundary dominates
            iterations.append(0)
            continue
        boundary = GridFunction(space, values, mask)
        state = solve_dirichlet(space, boundary, g, config)
        if not state.converged:
            raise DomainError(f"solver failed to converge on truncation r={r}")
        probes.append(float(state.u.values[probe & interior].max()) if (probe & interior).any()
                      else float(state.u.values[probe].max()))
        iterations.append(state.iterations)

    m = np.asarray(probes)
    strictly_decreasing = bool(np.all(np.diff(m) < 0))
    stable = bool(np.max(np.abs(m - m[0])) <= stability_tol)
    if stable and len(m) > 1:
        verdict = "INCOMPLETE-LIKE"
    elif strictly_decreasing and m[-1] <= decay_ratio * m[0]:
        verdict = "COMPLETE-LIKE"
    else:
        verdict = "INCONCLUSIVE"
    return {
        "radii": list(family.radii),
        "probe_maxima": probes,
        "iterations": iterations,
        "strictly_decreasing": strictly_decreasing,
        "stable": stable,
        "verdict": verdict,
        "decay_ratio": decay_ratio,
        "stability_tol": stability_tol,
        "model": family.label,
    }


# ---------------------------------------------------------------------------
# maximum principles
# ---------------------------------------------------------------------------


def _region_membership_and_boundary(
    space: QuasiMetricSpace, region: set[int], eps: float
) -> tuple[np.ndarray, np.ndarray]:
    """Region mask and its graph boundary: the closed-eps-ball hull of the
    region (both directions) minus the region.  The region itself plays the
    role of the open set, so pointwise inequalities are required at every one
    of its nodes; ball members beyond it are the boundary data."""
    in_region = np.zeros(space.n, dtype=bool)
    in_region[list(region)] = True
    hull = np.zeros(space.n, dtype=bool)
    for direction in ("forward", "backward"):
        indptr, indices = space.ball_csr(eps, direction)
        for x in region:
            hull[indices[indptr[x]:indptr[x + 1]]] = True
    boundary = hull & ~in_region
    return in_region, boundary


def wmp_check(
    u: GridFunction,
    Omega: Iterable[NodeId],
    g: Absorption | None,
    tol: float,
    epsilon: float | None = None,
) -> dict:
    """Boundary-gap report for the maximum principle at infinity.

    Precondition: u is a discrete subsolution at every node of Omega,
    discrete_operator(u) >= g(u) - tol (checked; rejected otherwise).
    Reports sup over Omega, sup over the graph boundary of Omega, and the gap;
    the principle holds when gap <= tol.
    """
    space = u.space
    eps = space.max_edge_weight if epsilon is None else float(epsilon)
    region = set(space.indices(Omega))
    if not region:
        raise InputError("Omega must be nonempty")
    in_region, boundary = _region_membership_and_boundary(space, region, eps)
    if not boundary.any():
        raise InputError("Omega has empty graph boundary")
    op = operator_field(u, eps)
    gu = g(u.values) if g is not None else np.zeros(space.n)
    bad = in_region & (op < gu - tol)
    if bad.any():
        node = space.node_ids[int(np.nonzero(bad)[0][0])]
        worst = float((gu - op)[bad].max())
        raise InputError(f"u is not a discrete subsolution on Omega (defect {worst:.3e} at {node!r})")
    region_arr = np.fromiter(region, dtype=int)
    sup_omega = float(u.values[region_arr].max())
    sup_boundary = float(u.values[boundary].max())
    gap = sup_omega - sup_boundary
    return {
        "sup_omega": sup_omega,
        "sup_boundary": sup_boundary,
        "gap": gap,
        "holds": gap <= tol,
        "tol": float(tol),
    }


def eikonal_wmp_check(
    u: GridFunction,
    Omega: Iterable[NodeId],
    G,
    tol: float,
) -> dict:
    """Boundary-gap report for subsolutions of G(u) - F(grad u) = 0.

    Precondition: the discrete eikonal residual accepts u at every node of
    Omega (residual <= tol); rejected otherwise.
    """
    space = u.space
    eps = space.max_edge_weight
    region = set(space.indices(Omega))
    if not region:
        raise InputError("Omega must be nonempty")
    in_region, boundary = _region_membership_and_boundary(space, region, eps)
    if not boundary.any():
        raise InputError("Omega has empty graph boundary")
    res = eikonal_residual(u, space, G)
    bad = in_region & (res > tol)
    if bad.any():
        node = space.node_ids[int(np.nonzero(bad)[0][0])]
        raise InputError(
            f"u is not a discrete eikonal subsolution on Omega (residual {float(res[bad].max()):.3e} at {node!r})"
        )
    region_arr = np.fromiter(region, dtype=int)
    sup_omega = float(u.values[region_arr].max())
    sup_boundary = float(u.values[boundary].max())
    gap = sup_omega - sup_boundary
    return {
        "sup_omega": sup_omega,
        "sup_boundary": sup_boundary,
        "gap": gap,
        "holds": gap <= tol,
        "tol": float(tol),
    }


# ---------------------------------------------------------------------------
# sharp power-absorption constant
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThetaCase:
    """Power absorption lam * s_+^theta together with the matched profile
    constant tau = (lam (1-theta)^2 / (2 (1+theta)))^(1/(1-theta))."""

    lam: float
    theta: float

    def __post_init__(self):
        if not (self.lam > 0 and 0.0 < self.theta < 1.0):
            raise InputError("need lam > 0 and theta in (0, 1)")

    @property
    def tau(self) -> float:
        return (self.lam * (1.0 - self.theta) ** 2 / (2.0 * (1.0 + self.theta))) ** (1.0 / (1.0 - self.theta))

    @property
    def exponent(self) -> float:
        return 2.0 / (1.0 - self.theta)

    def exact_profile(self, t):
        return self.tau * np.asarray(t, dtype=float) ** self.exponent

    def profile_residual(self, t) -> float:
        """max |eta'^2 - G(eta)| of the exact profile with b = 0 (the
        first-integral check; 0 up to roundoff for the matched tau)."""
        t = np.asarray(t, dtype=float)
        eta = self.exact_profile(t)
        etap = self.tau * self.exponent * t ** (self.exponent - 1.0)
        g = Absorption.power(self.lam, self.theta)
        G = np.asarray(g.primitive(0.0, eta))
        return float(np.abs(etap**2 - G).max())


def theta_liouville_check(
    case: ThetaCase,
    h: float,
    config: SchemeConfig | None = None,
) -> dict:
    """Reproduce the sharpness witness on a 1D grid over [0, 1].

    Solves the discrete Dirichlet problem with absorption lam * s_+^theta and
    boundary values 0 and tau, compares against the exact profile
    tau * t^(2/(1-theta)), and reports the sup error together with the exact
    profile's own residual (the sharpness witness).  The default scheme damps
    the update by 1/2: the power absorption has unbounded derivative at 0, so
    the undamped explicit iteration limit-cycles near the flat end.
    """
    if config is None:
        config = SchemeConfig(damping=0.5)
    n = int(round(1.0 / h))
    if abs(n * h - 1.0) > 1e-9 or n < 2:
        raise InputError("h must divide 1 into at least 2 cells")
    norm = RandersNorm.euclidean(1)
    space = grid_space(norm, [(0.0, 1.0)], h, stencil=((1,), (-1,)))
    tau = case.tau
    mask_ids = [(0,), (n,)]
    boundary = GridFunction.from_boundary(space, mask_ids, [0.0, tau])
    g = Absorption.power(case.lam, case.theta)
    state = solve_dirichlet(space, boundary, g, config)
    t = space.coords[:, 0]
    exact = case.exact_profile(t)
    sup_error = float(np.abs(state.u.values - exact).max())
    witness = case.profile_residual(np.linspace(0.0, 1.0, 1001))
    return {
        "lam": case.lam,
        "theta": case.theta,
        "tau": tau,
        "h": h,
        "sup_error": sup_error,
        "witness_residual": witness,
        "converged": state.converged,
        "iterations": state.iterations,
    }


# ---------------------------------------------------------------------------
# capacity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CapacityEstimate:
    K: tuple[NodeId, ...]
    inner_radius: float
    radii: tuple[float, ...]
    lipschitz_numbers: tuple[float, ...]
    slope_sups: tuple[float, ...]
    extrapolated_infimum: float
    analytic_lower_bound: float | None = None  # 1/D on bounded models


def capacity(family: ExhaustionFamily, K: Iterable[NodeId], inner_radius: float | None = None) -> CapacityEstimate:
    """Measure the explicit candidate family u_r = min(-1 + (R/r)(rho - R), 0).

    On each truncation of radius r > R the candidate is admissible (<= -1 on
    K, zero outside a finite set) and its Lipschitz number equals R/r; the
    slope sup is the max over edges of the discrete gradient surrogate.  The
    infimum estimate extrapolates the 1/r decay.  On bounded models the
    analytic lower bound 1/D is attached, with D the maximal forward distance
    from K to the rim.
    """
    K = tuple(K)
    if not K:
        raise InputError("K must be nonempty")
    radii_used: list[float] = []
    lips: list[float] = []
    slopes: list[float] = []
    R = inner_radius
    lower_bound = None
    for r in family.radii:
        space, rim = family.build(r)
        rho = forward_distance(space, [family.origin]).values
        Kidx = space.indices(K)
        R_here = float(np.ceil(max(rho[Kidx]))) if R is None else float(R)
        if r <= R_here:
            raise InputError(f"truncation radius {r} must exceed the inner radius {R_here}")
        u = np.minimum(-1.0 + (R_here / r) * (rho - R_here), 0.0)
        lips.append(lipschitz_constant(u, space.node_ids, space))
        tails = np.repeat(u, np.diff(space.out_indptr))
        slopes.append(float(((u[space.out_indices] - tails) / space.out_weights).max()))
        radii_used.append(float(r))
        R = R_here
        if family.bounded and lower_bound is None:
            rim_idx = space.indices(rim)
            D = 0.0  # maximal forward distance from K to the rim
            for k in K:
                dk = forward_distance(space, [k]).values[rim_idx]
                D = max(D, float(dk[np.isfinite(dk)].max()))
            lower_bound = 1.0 / D if D > 0 else math.inf
    r_arr = np.asarray(radii_used)
    v_arr = np.asarray(lips)
    # least-squares fit v ~ a + b/r; the limit a is the infimum estimate
    A = np.stack([np.ones_like(r_arr), 1.0 / r_arr], axis=1)
    coef, *_ = np.linalg.lstsq(A, v_arr, rcond=None)
    extrap = float(max(coef[0], 0.0)) if len(radii_used) > 1 else float(v_arr[-1])
    return CapacityEstimate(
        K=K,
        inner_radius=float(R),
        radii=tuple(radii_used),
        lipschitz_numbers=tuple(lips),
        slope_sups=tuple(slopes),
        extrapolated_infimum=extrap,
        analytic_lower_bound=lower_bound,
    )


def admissible_candidate_lipschitz(
    space: QuasiMetricSpace,
    K: Iterable[NodeId],
    rim: Iterable[NodeId],
    n_samples: int,
    seed: int,
    pair_distances: np.ndarray | None = None,
) -> np.ndarray:
    """Lipschitz numbers of random admissible candidates on a bounded model.

    A candidate takes values <= -1 on K, 0 on the rim (compact support inside
    the incomplete space), and arbitrary values in [-2, 0] elsewhere.  Returns
    the array of Lipschitz numbers over all node pairs.
    """
    rng = np.random.default_rng(seed)
    Kidx = np.array(space.indices(K), dtype=int)
    rim_idx = np.array(space.indices(rim), dtype=int)
    D = (pairwise_distances(space, space.node_ids) if pair_distances is None else pair_distances).copy()
    if not np.isfinite(D).all():
        raise DomainError("bounded model must have finite pairwise distances")
    np.fill_diagonal(D, np.inf)
    out = np.empty(n_samples)
    for i in range(n_samples):
        u = rng.uniform(-2.0, 0.0, space.n)
        u[Kidx] = -1.0 - np.abs(rng.normal(0.0, 0.5, Kidx.size))
        u[rim_idx] = 0.0
        out[i] = float(((u[None, :] - u[:, None]) / D).max())
    return out


# ---------------------------------------------------------------------------
# near-maximum point finder
# ---------------------------------------------------------------------------


def ekeland_point(
    u,
    x0: NodeId,
    eps: float,
    delta: float,
    space: QuasiMetricSpace,
) -> tuple[NodeId, dict]:
    """Constructive near-maximum principle on a finite space.

    Starting from x0 with u(x0) > sup u - eps, repeatedly move to the
    u-maximizing node violating u(y) <= u(x) + (eps/delta) d(x, y) (ties by
    node order).  u strictly increases along the chain, so the walk terminates
    at a point xbar satisfying

        u(xbar) >= u(x0),  d(x0, xbar) <= delta,
        u(y) <= u(xbar) + (eps/delta) d(xbar, y)  for every y,

    all three verified exhaustively in the returned certificate.
    """
    vals = np.asarray(getattr(u, "values", u), dtype=float)
    if not (eps > 0 and delta > 0):
        raise InputError("eps and delta must be positive")
    i0 = space.index(x0)
    sup_u = float(vals.max())
    if not vals[i0] > sup_u - eps:
        raise InputError("need u(x0) > sup u - eps")
    slope = eps / delta
    x = i0
    for _ in range(space.n + 1):
        d = forward_distance(space, [space.node_ids[x]]).values
        with np.errstate(invalid="ignore"):
            viol = vals > vals[x] + slope * d + 1e-15
        viol[x] = False
        viol &= np.isfinite(d)
        if not viol.any():
            break
        cand = np.nonzero(viol)[0]
        x = int(cand[np.argmax(vals[cand])])
    xbar = space.node_ids[x]
    d_from_xbar = forward_distance(space, [xbar]).values
    d_x0 = forward_distance(space, [x0]).values
    with np.errstate(invalid="ignore"):
        margins = vals - (vals[x] + slope * d_from_xbar)
    margins = np.where(np.isfinite(d_from_xbar), margins, -np.inf)
    margins[x] = 0.0
    certificate = {
        "value_ok": bool(vals[x] >= vals[i0]),
        "distance_ok": bool(d_x0[x] <= delta + 1e-12),
        "distance": float(d_x0[x]),
        "cone_ok": bool(np.max(margins) <= 1e-12),
        "worst_cone_margin": float(np.max(margins)),
        "valid": False,
    }
    certificate["valid"] = certificate["value_ok"] and certificate["distance_ok"] and certificate["cone_ok"]
    return xbar, certificate


# ---------------------------------------------------------------------------
# local Lipschitz inequality
# ---------------------------------------------------------------------------


def local_lipschitz_check(
    u,
    space: QuasiMetricSpace,
    z: NodeId,
    r: float,
    c: float = 0.0,
    band: float | None = None,
    slack: float = 1e-9,
) -> dict:
    """Verify the boundary-to-interior slope inequality on a forward ball.

    For u with discrete operator >= c on the ball, every w in B+_z(r) must
    satisfy

        (u(w) - u(z)) / d(z, w)
            <= max(c_- r, (c_-/2) r + S) + (c_-/2) d(z, w) + slack,

    with c_- = max(-c, 0) and S the max of (u(xi) - u(z)) / r over the sphere
    band {|d - r| <= band}.  Reports the worst margin; the ball must stay
    inside the domain (no boundary nodes strictly inside).
    """
    vals = np.asarray(getattr(u, "values", u), dtype=float)
    boundary_mask = getattr(u, "boundary_mask", None)
    zi = space.index(z)
    d = forward_distance(space, [z]).values
    if band is None:
        band = space.max_edge_weight
    inside = np.isfinite(d) & (d < r) & (np.arange(space.n) != zi)
    sph = np.isfinite(d) & (np.abs(d - r) <= band + 1e-12)
    if not sph.any():
        raise InputError("empty sphere band; enlarge band or radius")
    if boundary_mask is not None and bool((inside & boundary_mask).any()):
        raise InputError("forward ball exits the solve domain")
    c_minus = max(-c, 0.0)
    S = float(((vals[sph] - vals[zi]) / r).max())
    lhs = (vals[inside] - vals[zi]) / d[inside]
    rhs = max(c_minus * r, 0.5 * c_minus * r + S) + 0.5 * c_minus * d[inside]
    margins = lhs - rhs
    worst = float(margins.max()) if margins.size else -math.inf
    worst_node = space.node_ids[int(np.nonzero(inside)[0][np.argmax(margins)])] if margins.size else None
    return {
        "holds": worst <= slack,
        "worst_margin": worst,
        "worst_node": worst_node,
        "sphere_size": int(sph.sum()),
        "slack": float(slack),
    }
