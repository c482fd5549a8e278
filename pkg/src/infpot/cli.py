"""Command-line entry point: config ingestion, experiment orchestration, and
artifact emission.

Subcommands: solve | cones | eta | capacity | detect-completeness | ekeland |
verify | theta, each taking `--config <path> --out <dir> [--seed N]`.  The
config is a single JSON document; all numeric parameters are validated against
the preconditions of the targeted operations before any computation starts.
Exit codes: 0 success, 2 validation error, 3 solver non-convergence,
4 principle violation beyond tolerance (verify mode).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import principles
from .absorption import Absorption
from .cones import make_cone, solve_eta
from .errors import ConfigError, InfpotError, InputError
from .quasimetric import (
    RandersNorm,
    STENCIL_4,
    STENCIL_8,
    QuasiMetricSpace,
    forward_distance,
    grid_space,
    lipschitz_constant,
)
from .reporting import emit_plot, format_node_id, node_value_rows, write_csv, write_json
from .scheme import GridFunction, SchemeConfig, solve_dirichlet, solve_obstacle

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3
EXIT_VIOLATION = 4

COMMANDS = ("solve", "cones", "eta", "capacity", "detect-completeness", "ekeland", "verify", "theta")


# ---------------------------------------------------------------------------
# config access with field paths
# ---------------------------------------------------------------------------


def _get(cfg: dict, path: str, kind, default=..., predicate=None, pred_text=""):
    node = cfg
    parts = path.split(".")
    for i, part in enumerate(parts):
        if not isinstance(node, dict) or part not in node:
            if default is not ...:
                return default
            raise ConfigError(".".join(parts[: i + 1]), "missing required field")
        node = node[part]
    if kind is float and isinstance(node, int) and not isinstance(node, bool):
        node = float(node)
    if kind is not None and not isinstance(node, kind):
        raise ConfigError(path, f"expected {getattr(kind, '__name__', kind)}, got {type(node).__name__}")
    if predicate is not None and not predicate(node):
        raise ConfigError(path, pred_text or "invalid value")
    return node


def _norm_from_config(cfg: dict, path: str, dim_hint: int | None = None) -> RandersNorm:
    spec = _get(cfg, path, dict, default=None)
    if spec is None:
        if dim_hint is None:
            raise ConfigError(path, "missing norm and no dimension hint")
        return RandersNorm.euclidean(dim_hint)
    A = np.asarray(_get({"n": spec}, "n.A", list), dtype=float)
    beta = np.asarray(_get({"n": spec}, "n.beta", list), dtype=float)
    try:
        return RandersNorm(A, beta)
    except InputError as exc:
        raise ConfigError(path, str(exc)) from None


def _stencil_from_config(spec, path: str, dim: int):
    if spec is None:
        return STENCIL_4 if dim == 2 else tuple((s,) for s in (1, -1)) if dim == 1 else None
    if spec == 4 and dim == 2:
        return STENCIL_4
    if spec == 8 and dim == 2:
        return STENCIL_8
    if spec == 2 and dim == 1:
        return ((1,), (-1,))
    if isinstance(spec, list):
        return tuple(tuple(int(c) for c in off) for off in spec)
    raise ConfigError(path, f"unsupported stencil {spec!r} for dimension {dim}")


def _space_from_config(cfg: dict) -> QuasiMetricSpace:
    kind = _get(cfg, "space.kind", str, predicate=lambda s: s in ("grid", "graph"),
                pred_text="must be 'grid' or 'graph'")
    if kind == "graph":
        path = Path(_get(cfg, "space.path", str))
        if not path.exists():
            raise ConfigError("space.path", f"file not found: {path}")
        try:
            return QuasiMetricSpace.from_edge_lines(path.read_text(encoding="utf-8"))
        except InputError as exc:
            raise ConfigError("space.path", str(exc)) from None
    bounds = _get(cfg, "space.bounds", list)
    try:
        bounds = [(float(lo), float(hi)) for lo, hi in bounds]
    except (TypeError, ValueError):
        raise ConfigError("space.bounds", "expected a list of [lo, hi] pairs") from None
    h = _get(cfg, "space.h", float, predicate=lambda v: v > 0, pred_text="must be positive")
    dim = len(bounds)
    norm = _norm_from_config(cfg, "space.norm", dim_hint=dim)
    if norm.dim != dim:
        raise ConfigError("space.norm", f"norm dimension {norm.dim} != bounds dimension {dim}")
    stencil = _stencil_from_config(cfg.get("space", {}).get("stencil"), "space.stencil", dim)
    mask_spec = cfg.get("space", {}).get("mask")
    mask = _mask_from_config(mask_spec) if mask_spec else None
    try:
        return grid_space(norm, bounds, h, stencil, mask=mask)
    except InputError as exc:
        raise ConfigError("space", str(exc)) from None


def _mask_from_config(spec: dict):
    kind = _get({"m": spec}, "m.kind", str)
    if kind == "none":
        return None
    if kind == "outside-disk":
        r = _get({"m": spec}, "m.radius", float, predicate=lambda v: v > 0, pred_text="must be positive")
        return lambda c: bool(np.linalg.norm(c) > r)
    raise ConfigError("space.mask.kind", f"unknown mask kind {kind!r}")


def _absorption_from_config(cfg: dict, path: str = "absorption") -> Absorption:
    spec = _get(cfg, path, dict, default=None)
    if spec is None:
        return Absorption.zero()
    kind = _get(cfg, f"{path}.kind", str,
                predicate=lambda s: s in ("zero", "constant", "power", "table"),
                pred_text="must be one of zero|constant|power|table")
    try:
        if kind == "zero":
            return Absorption.zero()
        if kind == "constant":
            return Absorption.constant(_get(cfg, f"{path}.c", float))
        if kind == "power":
            return Absorption.power(
                _get(cfg, f"{path}.lambda", float, predicate=lambda v: v > 0, pred_text="must be positive"),
                _get(cfg, f"{path}.theta", float, predicate=lambda v: 0 < v < 1, pred_text="must lie in (0,1)"),
            )
        table_path = Path(_get(cfg, f"{path}.path", str))
        if not table_path.exists():
            raise ConfigError(f"{path}.path", f"file not found: {table_path}")
        try:
            data = np.loadtxt(table_path, delimiter=",", skiprows=1, ndmin=2)
        except ValueError as exc:
            raise ConfigError(f"{path}.path", f"cannot parse table: {exc}") from None
        if data.shape[1] < 2:
            raise ConfigError(f"{path}.path", "table needs two columns: s,g")
        return Absorption.from_table(data[:, 0], data[:, 1])
    except InputError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from None


def _scheme_from_config(cfg: dict) -> SchemeConfig:
    spec = cfg.get("scheme", {})
    if not isinstance(spec, dict):
        raise ConfigError("scheme", "expected an object")
    eps = spec.get("epsilon")
    if eps is not None:
        eps = _get(cfg, "scheme.epsilon", float, predicate=lambda v: v > 0, pred_text="must be positive")
    try:
        return SchemeConfig(
            epsilon=eps,
            tol=_get(cfg, "scheme.tol", float, default=1e-10),
            max_iter=_get(cfg, "scheme.max_iter", int, default=1_000_000,
                          predicate=lambda v: v > 0, pred_text="must be positive"),
            damping=_get(cfg, "scheme.damping", float, default=1.0),
            mode=_get(cfg, "scheme.mode", str, default="gauss-seidel"),
        )
    except ConfigError:
        raise
    except InfpotError as exc:
        raise ConfigError("scheme", str(exc)) from None


def _rim_ids(space: QuasiMetricSpace, stencil_size: int | None = None):
    """Outer boundary of a grid: nodes with a missing stencil neighbor."""
    degrees = np.diff(space.out_indptr)
    full = degrees.max() if stencil_size is None else stencil_size
    return [space.node_ids[i] for i in np.nonzero(degrees < full)[0]]


def _boundary_from_config(cfg: dict, space: QuasiMetricSpace, rng: np.random.Generator) -> GridFunction:
    spec = _get(cfg, "boundary", dict)
    kind = _get(cfg, "boundary.kind", str,
                predicate=lambda s: s in ("constant", "affine", "distance", "values", "random-lipschitz"),
                pred_text="must be one of constant|affine|distance|values|random-lipschitz")
    if kind == "values":
        nodes = _get(cfg, "boundary.nodes", list)
        vals = _get(cfg, "boundary.values", list)
        if len(nodes) != len(vals):
            raise ConfigError("boundary.values", "length mismatch with boundary.nodes")
        ids = [tuple(n) if isinstance(n, list) else n for n in nodes]
        return GridFunction.from_boundary(space, ids, np.asarray(vals, dtype=float))
    rim = _rim_ids(space)
    if not rim:
        raise ConfigError("boundary", "space has no rim nodes; provide explicit boundary values")
    idx = space.indices(rim)
    coords = space.coords[idx] if space.coords is not None else None
    if kind == "constant":
        v = _get(cfg, "boundary.value", float)
        return GridFunction.from_boundary(space, rim, np.full(len(rim), v))
    if kind == "distance":
        origin = _get(cfg, "boundary.origin", list, default=None)
        if origin is not None:
            origin_id = tuple(int(c) for c in origin)
        else:
            zero = tuple([0] * (space.coords.shape[1] if space.coords is not None else 0))
            origin_id = zero if zero in space else space.node_ids[0]
        field = forward_distance(space, [origin_id])
        return GridFunction.from_boundary(space, rim, field.values[idx])
    if kind == "affine":
        if coords is None:
            raise ConfigError("boundary.kind", "affine boundary needs node coordinates")
        coeffs = np.asarray(_get(cfg, "boundary.coeffs", list), dtype=float)
        offset = _get(cfg, "boundary.offset", float, default=0.0)
        return GridFunction.from_boundary(space, rim, coords @ coeffs + offset)
    # random-lipschitz: seeded mix of affine, kink, and bounded oscillation
    if coords is None:
        raise ConfigError("boundary.kind", "random-lipschitz boundary needs node coordinates")
    a = rng.uniform(-1.0, 1.0, coords.shape[1])
    kink = rng.uniform(coords.min(), coords.max(), coords.shape[1])
    amp = rng.uniform(0.0, 0.3)
    vals = coords @ a + np.abs(coords - kink).sum(axis=1) * rng.uniform(-0.5, 0.5) + amp * np.sin(
        (coords * rng.uniform(1.0, 3.0, coords.shape[1])).sum(axis=1)
    )
    return GridFunction.from_boundary(space, rim, vals)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_eta(cfg: dict, out: Path, rng) -> int:
    g = _absorption_from_config(cfg)
    u_star = _get(cfg, "eta.u_star", float)
    b = _get(cfg, "eta.b", float, predicate=lambda v: v >= 0, pred_text="must be nonnegative")
    span = _get(cfg, "eta.span", float, predicate=lambda v: v > 0, pred_text="must be positive")
    dt = _get(cfg, "eta.dt", float, default=None)
    profile = solve_eta(g, u_star, b, span, dt)
    write_csv(out / "profile.csv", ("t", "eta", "eta_prime"),
              zip(profile.t, profile.eta, profile.eta_prime))
    stride = max(1, profile.t.size // 512)
    svg = emit_plot(
        [{"name": "eta", "x": profile.t[::stride], "y": profile.eta[::stride]},
         {"name": "eta_prime", "x": profile.t[::stride], "y": profile.eta_prime[::stride]}],
        {"title": "radial profile", "xlabel": "t", "ylabel": "value"},
    )
    (out / "profile.svg").write_text(svg, encoding="utf-8")
    write_json(out / "summary.json", {
        "command": "eta",
        "u_star": u_star, "b": b, "span": span,
        "T": profile.T,
        "truncated": profile.truncated,
        "ko_converges": profile.ko_converges,
        "first_integral_residual": profile.first_integral_residual(),
    })
    return EXIT_OK


def _cmd_solve(cfg: dict, out: Path, rng) -> int:
    space = _space_from_config(cfg)
    g = _absorption_from_config(cfg)
    scheme = _scheme_from_config(cfg)
    boundary = _boundary_from_config(cfg, space, rng)
    obstacle_spec = cfg.get("obstacle")
    if obstacle_spec:
        value = _get(cfg, "obstacle.value", float)
        vals = np.full(space.n, value)
        # the clip never applies at boundary nodes; keep the precondition
        vals[boundary.boundary_mask] = np.maximum(value, boundary.values[boundary.boundary_mask])
        obstacle = GridFunction(space, vals, boundary.boundary_mask.copy())
        state = solve_obstacle(space, boundary, g, obstacle, scheme)
    else:
        state = solve_dirichlet(space, boundary, g, scheme)
    write_csv(out / "solution.csv", ("node", "x", "y", "u"),
              node_value_rows(space, state.u.values))
    if state.trace is not None and state.trace.size:
        write_csv(out / "trace.csv", ("iter", "residual"),
                  ((i + 1, r) for i, r in enumerate(state.trace)))
        stride = max(1, state.trace.size // 1024)
        svg = emit_plot([{"name": "residual", "x": np.arange(1, state.trace.size + 1)[::stride],
                          "y": state.trace[::stride]}],
                        {"title": "convergence trace", "xlabel": "iteration", "ylabel": "residual"})
        (out / "trace.svg").write_text(svg, encoding="utf-8")
    write_json(out / "summary.json", {
        "command": "solve",
        "nodes": space.n,
        "iterations": state.iterations,
        "residual": state.residual,
        "converged": state.converged,
        "epsilon": state.epsilon,
        "u_min": float(state.u.values.min()),
        "u_max": float(state.u.values.max()),
    })
    return EXIT_OK if state.converged else EXIT_NO_CONVERGENCE


def _cmd_cones(cfg: dict, out: Path, rng) -> int:
    space = _space_from_config(cfg)
    g = _absorption_from_config(cfg)
    center = _get(cfg, "cones.center", list)
    center_id = tuple(int(c) for c in center)
    b = _get(cfg, "cones.b", float, predicate=lambda v: v >= 0, pred_text="must be nonnegative")
    orientation = _get(cfg, "cones.orientation", str, default="forward",
                       predicate=lambda s: s in ("forward", "backward"),
                       pred_text="must be forward|backward")
    vertex = _get(cfg, "cones.vertex_value", float)
    u_star = _get(cfg, "cones.u_star", float)
    u_upper = _get(cfg, "cones.u_upper", float)
    cone = make_cone(space, center_id, b, g, vertex, orientation, u_star, u_upper)
    write_csv(out / "cone.csv", ("node", "x", "y", "value"),
              node_value_rows(space, cone.values.values))
    write_json(out / "summary.json", {
        "command": "cones",
        "center": format_node_id(center_id),
        "b": b,
        "orientation": orientation,
        "lipschitz_bound": cone.lipschitz_bound(),
        "measured_lipschitz": lipschitz_constant(cone.values, space.node_ids, space),
        "vertex_value": vertex,
    })
    return EXIT_OK


def _cmd_theta(cfg: dict, out: Path, rng) -> int:
    lam = _get(cfg, "theta.lambda", float, predicate=lambda v: v > 0, pred_text="must be positive")
    theta = _get(cfg, "theta.theta", float, predicate=lambda v: 0 < v < 1, pred_text="must lie in (0,1)")
    h_values = _get(cfg, "theta.h_values", list)
    scheme = _scheme_from_config(cfg)
    case = principles.ThetaCase(lam, theta)
    rows = []
    reports = []
    for h in h_values:
        rep = principles.theta_liouville_check(case, float(h), scheme)
        reports.append(rep)
        rows.append(("theta", repr(float(h)), "sup_error", rep["sup_error"]))
        rows.append(("theta", repr(float(h)), "witness_residual", rep["witness_residual"]))
        if not rep["converged"]:
            write_json(out / "summary.json", {"command": "theta", "error": "solver did not converge", "h": h})
            return EXIT_NO_CONVERGENCE
    errors = [rep["sup_error"] for rep in reports]
    order = None
    if len(errors) >= 2:
        hs = np.asarray([float(h) for h in h_values])
        order = float(np.polyfit(np.log(hs), np.log(np.maximum(errors, 1e-300)), 1)[0])
    write_csv(out / "theta.csv", ("experiment", "param", "observable", "value"), rows)
    svg = emit_plot([{"name": "sup_error", "x": [float(h) for h in h_values], "y": errors}],
                    {"title": "profile reproduction error", "xlabel": "h", "ylabel": "sup error"})
    (out / "theta.svg").write_text(svg, encoding="utf-8")
    write_json(out / "summary.json", {
        "command": "theta", "lambda": lam, "theta": theta, "tau": case.tau,
        "reports": reports, "observed_order": order,
    })
    return EXIT_OK


def _family_from_config(cfg: dict, section: str):
    model = _get(cfg, f"{section}.model", str, default="unbounded",
                 predicate=lambda s: s in ("unbounded", "bounded-layer", "bounded-spike"),
                 pred_text="must be unbounded|bounded-layer|bounded-spike")
    radii = _get(cfg, f"{section}.radii", list)
    if not radii or not all(isinstance(r, (int, float)) and r > 0 for r in radii):
        raise ConfigError(f"{section}.radii", "must be a list of positive numbers")
    h = _get(cfg, f"{section}.h", float, default=1.0, predicate=lambda v: v > 0, pred_text="must be positive")
    core = _get(cfg, f"{section}.core_radius", float, default=2.0,
                predicate=lambda v: v > 0, pred_text="must be positive")
    probe = _get(cfg, f"{section}.probe", list, default=[core + 1.0, core + 2.0])
    norm = _norm_from_config(cfg, f"{section}.norm", dim_hint=2)
    if model == "unbounded":
        return principles.grid_exhaustion(norm, h, STENCIL_4, radii, core, (float(probe[0]), float(probe[1])))
    extent = _get(cfg, f"{section}.extent", float, predicate=lambda v: v > 0, pred_text="must be positive")
    return principles.bounded_incomplete_family(
        norm, h, extent, STENCIL_4, radii, core, (float(probe[0]), float(probe[1])),
        spike=(model == "bounded-spike"),
    )


def _cmd_detect_completeness(cfg: dict, out: Path, rng) -> int:
    family = _family_from_config(cfg, "completeness")
    g = _absorption_from_config(cfg)
    if g.kind != "zero":
        g = g.monotone_envelope()
    scheme = _scheme_from_config(cfg)
    decay = _get(cfg, "completeness.decay_ratio", float, default=0.25)
    stab = _get(cfg, "completeness.stability_tol", float, default=1e-9)
    report = principles.detect_completeness(family, g, scheme, decay, stab)
    rows = [("completeness", repr(float(r)), "probe_max", m)
            for r, m in zip(report["radii"], report["probe_maxima"])]
    rows.append(("completeness", "", "verdict", report["verdict"]))
    write_csv(out / "completeness.csv", ("experiment", "param", "observable", "value"), rows)
    svg = emit_plot([{"name": "probe max", "x": report["radii"], "y": report["probe_maxima"]}],
                    {"title": f"probe maxima ({report['model']})", "xlabel": "radius", "ylabel": "m"})
    (out / "decay.svg").write_text(svg, encoding="utf-8")
    write_json(out / "summary.json", {"command": "detect-completeness", **report})
    return EXIT_OK


def _cmd_capacity(cfg: dict, out: Path, rng) -> int:
    family = _family_from_config(cfg, "capacity")
    inner = _get(cfg, "capacity.inner_radius", float, default=None)
    space0, _rim = family.build(family.radii[0])
    rho = forward_distance(space0, [family.origin]).values
    R = inner if inner is not None else family.core_radius
    K = [space0.node_ids[i] for i in np.nonzero(rho <= R + 1e-12)[0]]
    estimate = principles.capacity(family, K, inner_radius=R)
    rows = []
    for r, lip, sl in zip(estimate.radii, estimate.lipschitz_numbers, estimate.slope_sups):
        rows.append(("capacity", repr(float(r)), "lipschitz", lip))
        rows.append(("capacity", repr(float(r)), "slope_sup", sl))
    rows.append(("capacity", "", "extrapolated_infimum", estimate.extrapolated_infimum))
    if estimate.analytic_lower_bound is not None:
        rows.append(("capacity", "", "analytic_lower_bound", estimate.analytic_lower_bound))
    write_csv(out / "capacity.csv", ("experiment", "param", "observable", "value"), rows)
    svg = emit_plot(
        [{"name": "lipschitz", "x": estimate.radii, "y": estimate.lipschitz_numbers},
         {"name": "slope sup", "x": estimate.radii, "y": estimate.slope_sups}],
        {"title": "capacity candidates", "xlabel": "radius", "ylabel": "value"},
    )
    (out / "capacity.svg").write_text(svg, encoding="utf-8")
    write_json(out / "summary.json", {
        "command": "capacity",
        "inner_radius": estimate.inner_radius,
        "radii": list(estimate.radii),
        "lipschitz_numbers": list(estimate.lipschitz_numbers),
        "slope_sups": list(estimate.slope_sups),
        "extrapolated_infimum": estimate.extrapolated_infimum,
        "analytic_lower_bound": estimate.analytic_lower_bound,
        "K_size": len(estimate.K),
    })
    return EXIT_OK


def random_digraph(rng: np.random.Generator, n: int, edge_prob: float) -> QuasiMetricSpace:
    """Random weighted digraph, made undirected-connected by a random cycle
    backbone; weights uniform in [0.5, 2)."""
    nodes = list(range(n))
    perm = rng.permutation(n)
    edges = []
    seen = set()
    for i in range(n):
        a, bnode = int(perm[i]), int(perm[(i + 1) % n])
        edges.append((a, bnode, float(rng.uniform(0.5, 2.0))))
        seen.add((a, bnode))
    for a in range(n):
        for bnode in range(n):
            if a != bnode and (a, bnode) not in seen and rng.random() < edge_prob:
                edges.append((a, bnode, float(rng.uniform(0.5, 2.0))))
                seen.add((a, bnode))
    return QuasiMetricSpace(nodes, edges)


def _cmd_ekeland(cfg: dict, out: Path, rng) -> int:
    n = _get(cfg, "ekeland.nodes", int, default=50, predicate=lambda v: v >= 2, pred_text="must be >= 2")
    p = _get(cfg, "ekeland.edge_prob", float, default=0.15,
             predicate=lambda v: 0 <= v <= 1, pred_text="must lie in [0,1]")
    eps = _get(cfg, "ekeland.eps", float, predicate=lambda v: v > 0, pred_text="must be positive")
    delta = _get(cfg, "ekeland.delta", float, predicate=lambda v: v > 0, pred_text="must be positive")
    instances = _get(cfg, "ekeland.instances", int, default=100,
                     predicate=lambda v: v > 0, pred_text="must be positive")
    rows = []
    all_valid = True
    for k in range(instances):
        space = random_digraph(rng, n, p)
        u = rng.uniform(0.0, 1.0, n)
        qualifying = np.nonzero(u > u.max() - eps)[0]
        x0 = int(qualifying[rng.integers(0, qualifying.size)])
        xbar, cert = principles.ekeland_point(u, x0, eps, delta, space)
        all_valid &= cert["valid"]
        rows.append(("ekeland", str(k), "xbar", format_node_id(xbar)))
        rows.append(("ekeland", str(k), "valid", cert["valid"]))
        rows.append(("ekeland", str(k), "distance", cert["distance"]))
    write_csv(out / "ekeland.csv", ("experiment", "param", "observable", "value"), rows)
    write_json(out / "summary.json", {
        "command": "ekeland", "instances": instances, "nodes": n,
        "eps": eps, "delta": delta, "all_certificates_valid": bool(all_valid),
    })
    return EXIT_OK if all_valid else EXIT_VIOLATION


def _cmd_verify(cfg: dict, out: Path, rng) -> int:
    """Solve, then check the maximum principles and the global Lipschitz bound."""
    space = _space_from_config(cfg)
    g = _absorption_from_config(cfg)
    scheme = _scheme_from_config(cfg)
    boundary = _boundary_from_config(cfg, space, rng)
    state = solve_dirichlet(space, boundary, g, scheme)
    if not state.converged:
        write_json(out / "summary.json", {"command": "verify", "converged": False})
        return EXIT_NO_CONVERGENCE
    u = state.u
    eps = state.epsilon
    interior_ids = [space.node_ids[i] for i in u.interior_indices()]
    boundary_ids = [space.node_ids[i] for i in np.nonzero(u.boundary_mask)[0]]
    lip_all = lipschitz_constant(u, space.node_ids, space)
    lip_boundary = lipschitz_constant(u, boundary_ids, space)
    wmp_tol = 2.0 * eps * lip_all
    umax, umin = float(u.values.max()), float(u.values.min())
    bmax, bmin = float(u.boundary_values.max()), float(u.boundary_values.min())
    constant = umax - umin <= 1e-12
    g_nonneg = g.nonnegative_on_range
    g_nonpos = g.kind == "zero" or bool(np.all(np.asarray(g(np.linspace(umin, umax, 257))) <= 1e-12))
    # each check only applies where its sign hypothesis on g holds: solutions
    # are subsolutions of the homogeneous comparison for g >= 0 (no interior
    # max, boundary gap, Lipschitz bound) and supersolutions for g <= 0 (no
    # interior min)
    checks: dict[str, dict] = {}
    if g_nonneg:
        checks["wmp"] = principles.wmp_check(u, interior_ids, g, wmp_tol, eps)
        checks["no_interior_max"] = {
            "holds": constant or umax <= bmax + 1e-12,
            "interior_max_excess": umax - bmax,
        }
        h = _get(cfg, "space.h", float, default=space.max_edge_weight)
        bound = math.sqrt(lip_boundary**2 + 2.0 * g.positive_part_integral(umin, umax)) * (1.0 + 10.0 * h)
        checks["global_lipschitz_bound"] = {
            "holds": lip_all <= bound,
            "lipschitz": lip_all,
            "bound": bound,
        }
    if g_nonpos:
        checks["no_interior_min"] = {
            "holds": constant or umin >= bmin - 1e-12,
            "interior_min_defect": bmin - umin,
        }
    if not checks:
        raise ConfigError("absorption", "verify requires g of one sign on the value range")
    rows = []
    for name, rep in checks.items():
        for key, val in rep.items():
            rows.append(("verify", name, key, val))
    write_csv(out / "verify.csv", ("experiment", "param", "observable", "value"), rows)
    ok = all(rep["holds"] for rep in checks.values())
    write_json(out / "summary.json", {
        "command": "verify", "converged": True, "checks": checks, "all_hold": bool(ok),
        "iterations": state.iterations,
    })
    return EXIT_OK if ok else EXIT_VIOLATION


_DISPATCH = {
    "eta": _cmd_eta,
    "solve": _cmd_solve,
    "cones": _cmd_cones,
    "theta": _cmd_theta,
    "detect-completeness": _cmd_detect_completeness,
    "capacity": _cmd_capacity,
    "ekeland": _cmd_ekeland,
    "verify": _cmd_verify,
}


def run(command: str, config: dict, out_dir: Path | str, seed: int | None = None) -> int:
    """Execute one subcommand; returns the process exit code."""
    if command not in _DISPATCH:
        raise ConfigError("command", f"unknown subcommand {command!r}")
    if not isinstance(config, dict):
        raise ConfigError("", "config root must be a JSON object")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg_seed = config.get("seed", 0)
    if not isinstance(cfg_seed, int) or isinstance(cfg_seed, bool):
        raise ConfigError("seed", "must be an integer")
    rng = np.random.default_rng(seed if seed is not None else cfg_seed)
    return _DISPATCH[command](config, out, rng)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="infpot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", required=True, help="output directory for artifacts")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    args = parser.parse_args(argv)
    try:
        config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except FileNotFoundError:
        print(f"config: file not found: {args.config}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(f"config: invalid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(args.command, config, args.out, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfpotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
