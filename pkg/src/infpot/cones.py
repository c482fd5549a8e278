"""Radial profiles and g-cones.

The profile eta_b solves eta'' = g(eta) with eta(0) = u_star, eta'(0) = b, and
satisfies the first integral (eta')^2 - b^2 = G(eta) with
G(s) = 2 * integral_{u_star}^s g.  Forward and backward cones compose the
profile with the asymmetric distance from a center

    C+(w) = eta_b(d(z, w) + R_b(u(z))),   C-(w) = eta_b(R_b(u(z)) - d(w, z)),

where the radius map R_b(a) is the first time the profile reaches value a.
Clamped extensions hold the cap value u_upper (forward) or the floor u_star
(backward) outside the natural cone domain and are globally Lipschitz with
constant at most sqrt(b^2 + 2 * integral g_+).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numba import njit
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.optimize import brentq

from .absorption import Absorption
from .errors import DomainError, InputError, SlopeInadmissibleError
from .quasimetric import NodeId, QuasiMetricSpace, backward_distance, forward_distance, lipschitz_constant, pairwise_distances
from .scheme import GridFunction, _absorption_params, _g_eval

_ADMISSIBILITY_MARGIN = 1e-12
_DEFAULT_STEPS = 100_000
_BLOWUP = 1e12


# ---------------------------------------------------------------------------
# profile integration
# ---------------------------------------------------------------------------


@njit(cache=True)
def _rk4_profile(u0, b, dt, n_steps, gkind, gp1, gp2, gxs, gys):
    """Classical 4th-order integration of eta'' = g(eta).

    The first few fixed steps are internally subdivided: non-Lipschitz
    absorptions (power kind at the anchor) concentrate their local error in
    the startup, and the first integral then carries it forever.  Returns
    (eta, eta_prime, n_done, slope_ok); n_done < n_steps signals blow-up
    truncation, slope_ok=False signals eta' dropping to 0 or below
    (inadmissible slope for the visited range).
    """
    eta = np.empty(n_steps + 1)
    etap = np.empty(n_steps + 1)
    eta[0] = u0
    etap[0] = b
    x = u0
    v = b
    cx = 0.0  # Kahan compensation; plain accumulation drifts ~1e-11 over 1e5 steps
    cv = 0.0
    n_done = n_steps
    slope_ok = True
    for i in range(n_steps):
        substeps = 64 if i < 4 else 1
        s = dt / substeps
        for _ in range(substeps):
            k1x = v
            k1v = _g_eval(gkind, gp1, gp2, gxs, gys, x)
            k2x = v + 0.5 * s * k1v
            k2v = _g_eval(gkind, gp1, gp2, gxs, gys, x + 0.5 * s * k1x)
            k3x = v + 0.5 * s * k2v
            k3v = _g_eval(gkind, gp1, gp2, gxs, gys, x + 0.5 * s * k2x)
            k4x = v + s * k3v
            k4v = _g_eval(gkind, gp1, gp2, gxs, gys, x + s * k3x)
            incx = s / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) - cx
            tx = x + incx
            cx = (tx - x) - incx
            x = tx
            incv = s / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) - cv
            tv = v + incv
            cv = (tv - v) - incv
            v = tv
        eta[i + 1] = x
        etap[i + 1] = v
        if v <= 0.0:
            slope_ok = False
            n_done = i + 1
            break
        if abs(x) > _BLOWUP or abs(v) > _BLOWUP:
            n_done = i + 1
            break
    return eta, etap, n_done, slope_ok


@dataclass(frozen=True)
class EtaProfile:
    """Sampled solution of eta'' = g(eta) with its radius map."""

    absorption: Absorption
    u_star: float
    b: float
    t: np.ndarray
    eta: np.ndarray
    eta_prime: np.ndarray
    dt: float
    span: float
    truncated: bool
    ko_converges: bool | None

    @property
    def T(self) -> float:
        """End of the computed interval."""
        return float(self.t[-1])

    @property
    def is_constant(self) -> bool:
        return self.b == 0.0 and self.ko_converges is False

    @cached_property
    def _spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.t, self.eta, self.eta_prime)

    def value(self, tq):
        """eta at query times (piecewise cubic Hermite through the samples)."""
        if self.is_constant:
            out = np.full_like(np.asarray(tq, dtype=float), self.u_star)
            return float(out) if np.ndim(tq) == 0 else out
        tq_arr = np.clip(np.asarray(tq, dtype=float), self.t[0], self.t[-1])
        out = self._spline(tq_arr)
        return float(out) if np.ndim(tq) == 0 else out

    def slope(self, tq):
        if self.is_constant:
            out = np.zeros_like(np.asarray(tq, dtype=float))
            return float(out) if np.ndim(tq) == 0 else out
        tq_arr = np.clip(np.asarray(tq, dtype=float), self.t[0], self.t[-1])
        out = self._spline.derivative()(tq_arr)
        return float(out) if np.ndim(tq) == 0 else out

    def first_integral_residual(self) -> float:
        """max over samples of |(eta')^2 - b^2 - G(eta)|."""
        G = self.absorption.primitive(self.u_star, self.eta)
        return float(np.abs(self.eta_prime**2 - self.b**2 - np.asarray(G)).max())

    def radius(self, a: float) -> float:
        return radius(self, a)


def solve_eta(
    g: Absorption,
    u_star: float,
    b: float,
    span: float,
    dt: float | None = None,
) -> EtaProfile:
    """Integrate the profile ODE on [0, span].

    For b > 0 the slope must satisfy the strict admissibility bound
    b > sqrt(max(-G_*, 0)); violation raises SlopeInadmissibleError (statically
    when the absorption carries a stated range, dynamically when the slope
    hits 0 during integration).  For b = 0, g must be nonnegative: if the
    small-end integral of 1/sqrt(G) converges the selected solution inverts
    t = integral_{u_star}^{eta} ds/sqrt(G(s)), otherwise the profile is the
    constant u_star.  Blow-up before the span truncates the profile and sets
    the flag.
    """
    if not span > 0:
        raise InputError("span must be positive")
    if b < 0:
        raise InputError("slope b must be nonnegative")
    if dt is None:
        dt = span / _DEFAULT_STEPS
    if not 0 < dt <= span:
        raise InputError("dt must lie in (0, span]")

    if b == 0.0:
        if not g.nonnegative_on_range:
            raise InputError("b = 0 requires nonnegative absorption")
        ko = g.ko_condition(u_star)
        if not ko:
            n = max(2, int(round(span / dt)) + 1)
            t = np.linspace(0.0, span, n)
            return EtaProfile(g, u_star, 0.0, t, np.full(n, float(u_star)), np.zeros(n),
                              dt=float(t[1] - t[0]), span=span, truncated=False, ko_converges=False)
        return _solve_eta_ko(g, u_star, span, dt)

    _, hi_range = g.range
    if math.isfinite(hi_range):
        threshold = g.slope_threshold(u_star, hi_range)
        if not b > threshold + _ADMISSIBILITY_MARGIN:
            raise SlopeInadmissibleError(
                f"slope b={b} violates the strict bound b > {threshold} on the stated range"
            )

    n_steps = max(1, int(round(span / dt)))
    gkind, gp1, gp2, gxs, gys = _absorption_params(g)
    eta, etap, n_done, slope_ok = _rk4_profile(float(u_star), float(b), float(dt), n_steps,
                                               gkind, gp1, gp2, gxs, gys)
    if not slope_ok:
        raise SlopeInadmissibleError(
            f"slope b={b} is inadmissible: eta' reached 0 at t={n_done * dt:.6g}"
        )
    truncated = n_done < n_steps
    m = n_done + 1
    t = np.arange(m) * dt
    return EtaProfile(g, float(u_star), float(b), t, eta[:m], etap[:m],
                      dt=float(dt), span=float(span), truncated=truncated, ko_converges=None)


def _solve_eta_ko(g: Absorption, u_star: float, span: float, dt: float) -> EtaProfile:
    """b = 0 profile under the convergent small-end integral, by inverting
    t(a) = integral_{u_star}^{a} ds/sqrt(G(s)) with the substitution
    s = u_star + sigma^2 that tames the singular lower endpoint."""

    def integrand(sigma: float) -> float:
        G = g.primitive(u_star, u_star + sigma * sigma)
        if G <= 0.0:
            return 0.0
        return 2.0 * sigma / math.sqrt(G)

    sigma_hi = 1.0
    for _ in range(200):
        total, _err = quad(integrand, 0.0, sigma_hi, limit=400)
        if total >= span or u_star + sigma_hi**2 > _BLOWUP:
            break
        sigma_hi *= 2.0

    knots = np.concatenate([[0.0], np.geomspace(sigma_hi * 1e-9, sigma_hi, 600)])
    t_knots = np.zeros_like(knots)
    for i in range(1, knots.size):
        seg, _err = quad(integrand, knots[i - 1], knots[i], limit=400)
        t_knots[i] = t_knots[i - 1] + seg
    a_knots = u_star + knots**2
    keep = np.concatenate([[True], np.diff(t_knots) > 1e-15])
    inverse = PchipInterpolator(t_knots[keep], a_knots[keep])

    n = max(2, int(round(span / dt)) + 1)
    t = np.linspace(0.0, min(span, float(t_knots[-1])), n)
    eta = np.asarray(inverse(t), dtype=float)
    eta = np.maximum(eta, u_star)
    G = np.maximum(np.asarray(g.primitive(u_star, eta)), 0.0)
    etap = np.sqrt(G)
    truncated = t_knots[-1] < span - 1e-12
    return EtaProfile(g, float(u_star), 0.0, t, eta, etap,
                      dt=float(t[1] - t[0]), span=float(span), truncated=truncated, ko_converges=True)


def radius(profile: EtaProfile, a: float) -> float:
    """R_b(a) = inf{t : eta_b(t) >= a}, +inf when the profile never reaches a.

    Bracketed on the sampled profile and refined in t well below the 1e-10
    contract.  For the constant b = 0 profile, R_0(a) = +inf for every
    a > u_star.
    """
    if a < profile.u_star - 1e-12:
        raise InputError("radius query below u_star")
    if a <= profile.u_star:
        return 0.0
    if profile.is_constant:
        return math.inf
    eta = profile.eta
    if eta[-1] < a:
        return math.inf
    k = int(np.searchsorted(eta, a, side="left"))
    if k == 0:
        return float(profile.t[0])
    lo, hi = float(profile.t[k - 1]), float(profile.t[k])
    if eta[k] == a:
        return hi
    f = profile.value
    # monotone bisection bracket, polished to machine precision (well past
    # the promised 1e-10) so exact cones stay exact
    root = brentq(lambda t: f(t) - a, lo, hi, xtol=1e-15, rtol=8.9e-16)
    return float(root) if f(root) >= a else float(np.nextafter(root, hi))


# ---------------------------------------------------------------------------
# cones
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GCone:
    """A forward or backward cone with its clamped extension on a space."""

    space: QuasiMetricSpace
    center: NodeId
    b: float
    orientation: str
    profile: EtaProfile
    vertex_value: float
    u_star: float
    u_upper: float
    values: GridFunction

    def value(self, node: NodeId) -> float:
        return float(self.values.values[self.space.index(node)])

    def lipschitz_bound(self) -> float:
        """sqrt(b^2 + 2 * integral_{u_star}^{u_upper} g_+)."""
        hi = self.u_upper if math.isfinite(self.u_upper) else float(self.profile.eta[-1])
        return math.sqrt(self.b**2 + 2.0 * self.profile.absorption.positive_part_integral(self.u_star, hi))


def _reach_time(g: Absorption, u_star: float, b: float, target: float) -> float:
    """Time for the profile to reach `target`, from the implicit identity
    t = integral_{u_star}^{target} ds / sqrt(b^2 + G(s))."""
    if not math.isfinite(target):
        return math.inf
    if target <= u_star:
        return 0.0

    def integrand(s: float) -> float:
        G = g.primitive(u_star, s)
        return 1.0 / math.sqrt(max(b * b + G, 1e-300))

    val, _err = quad(integrand, u_star, target, limit=400)
    return float(val)


def _profile_for_cone(
    g: Absorption,
    u_star: float,
    u_upper: float,
    b: float,
    extra_span: float = 0.0,
) -> EtaProfile:
    """Profile integrated far enough to cover values up to u_upper (plus
    `extra_span` beyond the vertex reach, for unclamped forward cones)."""
    threshold = g.slope_threshold(u_star, u_upper if math.isfinite(u_upper) else u_star)
    if not b > threshold + _ADMISSIBILITY_MARGIN:
        raise SlopeInadmissibleError(
            f"cone slope b={b} violates the strict bound b > {threshold}"
        )
    cap_time = _reach_time(g, u_star, b, u_upper)
    if math.isfinite(cap_time):
        span = 1.02 * cap_time + extra_span + 1e-9
    else:
        span = extra_span + 1e-9 if extra_span > 0 else 1.0
    profile = solve_eta(g, u_star, b, span)
    for _ in range(60):
        done = profile.truncated
        if math.isfinite(u_upper) and profile.eta[-1] >= u_upper and profile.T >= extra_span:
            done = True
        if not math.isfinite(u_upper) and profile.T >= extra_span:
            done = True
        if done:
            break
        span *= 2.0
        profile = solve_eta(g, u_star, b, span)
    return profile


def make_cone(
    space: QuasiMetricSpace,
    z: NodeId,
    b: float,
    g: Absorption,
    vertex_value: float,
    orientation: str = "forward",
    u_star: float = 0.0,
    u_upper: float = 1.0,
) -> GCone:
    """Build the clamped cone extension centered at z.

    Forward cones take the value u_upper outside the ball of radius
    R_b(u_upper) - R_b(u(z)); backward cones take u_star outside the backward
    ball of radius R_b(u(z)).  Nodes at infinite distance fall in the clamp
    region; if the forward cone never reaches its cap (infinite radius) they
    are a domain error.
    """
    if not (u_star <= vertex_value <= u_upper):
        raise InputError("need u_star <= vertex_value <= u_upper")
    if orientation not in ("forward", "backward"):
        raise InputError("orientation must be 'forward' or 'backward'")

    if orientation == "forward":
        d = forward_distance(space, [z]).values
    else:
        d = backward_distance(space, [z]).values
    finite_d = d[np.isfinite(d)]
    max_d = float(finite_d.max()) if finite_d.size else 0.0

    if math.isfinite(u_upper):
        profile = _profile_for_cone(g, u_star, u_upper, b)
    else:
        t_need = _reach_time(g, u_star, b, vertex_value) + max_d
        profile = _profile_for_cone(g, u_star, u_upper, b, extra_span=1.02 * t_need + 1e-9)
    r_vertex = radius(profile, vertex_value)
    if not math.isfinite(r_vertex):
        raise DomainError("profile never reaches the vertex value")
    r_cap = radius(profile, u_upper) if math.isfinite(u_upper) else math.inf

    if orientation == "forward":
        vals = np.empty(space.n)
        infinite = ~np.isfinite(d)
        if math.isinf(r_cap):
            if infinite.any():
                raise DomainError("forward distance infinite where the unclamped cone needs it")
            vals = np.asarray(profile.value(d + r_vertex), dtype=float)
        else:
            inside = (d + r_vertex < r_cap) & ~infinite
            vals[inside] = profile.value(d[inside] + r_vertex)
            vals[~inside] = u_upper
    else:
        vals = np.full(space.n, float(u_star))
        inside = np.isfinite(d) & (d < r_vertex)
        vals[inside] = profile.value(r_vertex - d[inside])

    i = space.index(z)
    vals[i] = vertex_value  # vertex value exact by contract
    gf = GridFunction(space, vals, np.zeros(space.n, dtype=bool))
    return GCone(space, z, float(b), orientation, profile, float(vertex_value),
                 float(u_star), float(u_upper), gf)


# ---------------------------------------------------------------------------
# sliding slope
# ---------------------------------------------------------------------------


def _cone_sandwich_holds(
    uA: np.ndarray,
    D: np.ndarray,
    g: Absorption,
    b: float,
    u_star: float,
    u_upper: float,
    tol: float = 1e-11,
) -> bool:
    """Whether, for every z in A, clamped cones of slope b centered at z
    sandwich u over A.  D[i, j] = d(A[i], A[j]); uA = u on A."""
    profile = _profile_for_cone(g, u_star, u_upper, b)
    r_cap = radius(profile, u_upper)
    n = uA.size
    for i in range(n):
        r_vertex = radius(profile, uA[i])
        dz = D[i, :]  # d(z, w)
        if math.isinf(r_cap):
            upper = np.asarray(profile.value(dz + r_vertex))
        else:
            upper = np.where(dz + r_vertex < r_cap, profile.value(dz + r_vertex), u_upper)
        if np.any(uA > upper + tol):
            return False
        dwz = D[:, i]  # d(w, z)
        lower = np.where(dwz < r_vertex, profile.value(r_vertex - dwz), u_star)
        if np.any(uA < lower - tol):
            return False
    return True


def sliding_slope(u, A, space: QuasiMetricSpace, g: Absorption) -> float:
    """Infimal slope b such that clamped cones centered anywhere in A sandwich
    u on A, located by bisection to 1e-8.

    Requires g nonnegative on the value range of u over A, so the admissible
    set of slopes is a half-line and bisection is valid.
    """
    region = list(A)
    vals = np.asarray(getattr(u, "values", u), dtype=float)
    idx = space.indices(region)
    uA = vals[idx]
    u_star, u_upper = float(uA.min()), float(uA.max())
    if np.any(np.asarray(g(np.linspace(u_star, u_upper, 257))) < -1e-12):
        raise InputError("sliding slope requires g >= 0 on the value range of u over A")
    D = pairwise_distances(space, region)
    if not np.isfinite(D).all():
        raise DomainError("infinite distance inside A")
    lip = lipschitz_constant(vals, region, space)
    lo = g.slope_threshold(u_star, u_upper)  # = 0 for g >= 0
    hi = lip + 1.0

    probe = lo + 1e-9
    if _cone_sandwich_holds(uA, D, g, probe, u_star, u_upper):
        return lo
    if not _cone_sandwich_holds(uA, D, g, hi, u_star, u_upper):
        raise DomainError("no admissible slope found below Lip(u, A) + 1")
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if mid <= probe:
            break
        if _cone_sandwich_holds(uA, D, g, mid, u_star, u_upper):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# comparison checks
# ---------------------------------------------------------------------------


def graph_boundary(space: QuasiMetricSpace, K: set[int], eps: float | None = None) -> set[int]:
    """Ring of nodes outside K reachable from K within one closed eps-ball, in
    either direction (the boundary the monotone scheme sees)."""
    eps = space.max_edge_weight if eps is None else float(eps)
    ring: set[int] = set()
    for direction in ("forward", "backward"):
        indptr, indices = space.ball_csr(eps, direction)
        for x in K:
            for k in range(indptr[x], indptr[x + 1]):
                y = int(indices[k])
                if y not in K:
                    ring.add(y)
    return ring


def check_cone_comparison(
    u,
    cone: GCone,
    K,
    tol: float,
    epsilon: float | None = None,
) -> dict:
    """Verify the comparison implication on K for one cone.

    Forward cones: u <= cone on the ring boundary of K implies u <= cone on K
    (within additive tol).  Backward cones: the reversed inequalities.  Returns
    a report with the premise margin, the worst interior violation and its
    node; violations are data, not errors.
    """
    space = cone.space
    vals = np.asarray(getattr(u, "values", u), dtype=float)
    Kidx = set(space.indices(K))
    zi = space.index(cone.center)
    if zi in Kidx:
        raise InputError("cone center must lie outside K")
    ring = graph_boundary(space, Kidx, epsilon)
    if not ring:
        raise InputError("K has empty graph boundary")
    cvals = cone.values.values
    sign = 1.0 if cone.orientation == "forward" else -1.0
    ring_arr = np.fromiter(ring, dtype=int)
    K_arr = np.fromiter(Kidx, dtype=int)
    premise_margin = float((sign * (vals - cvals))[ring_arr].max())
    interior_gap = sign * (vals - cvals)
    worst_idx = int(K_arr[np.argmax(interior_gap[K_arr])])
    worst = float(interior_gap[K_arr].max())
    return {
        "premise_holds": premise_margin <= 1e-12,
        "premise_margin": premise_margin,
        "worst_violation": worst,
        "worst_node": space.node_ids[worst_idx],
        "holds": premise_margin > 1e-12 or worst <= tol,
        "tol": float(tol),
    }
