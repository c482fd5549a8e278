"""Acceptance criteria, one test per criterion, each printing a PASS line.

Run with `pytest -v -s tests/test_acceptance.py` to see the per-criterion
lines.  Tolerances are pinned here, not configurable.  Timed criteria measure
the computational section after a tiny warmup that triggers the one-time JIT
compilation of the two numba kernels.
"""

import math
import time

import numpy as np
import pytest

from infpot import (
    Absorption,
    GridFunction,
    RandersNorm,
    SchemeConfig,
    ThetaCase,
    bounded_incomplete_family,
    capacity,
    check_cone_comparison,
    detect_completeness,
    ekeland_point,
    forward_distance,
    grid_exhaustion,
    grid_space,
    lipschitz_constant,
    make_cone,
    solve_dirichlet,
    solve_eta,
    sup_convolution,
    theta_liouville_check,
    wmp_check,
)
from infpot.cli import random_digraph, run
from infpot.cones import graph_boundary
from infpot.principles import admissible_candidate_lipschitz
from infpot.quasimetric import pairwise_distances
from infpot.scheme import erode_mask, slope_minus, slope_plus


@pytest.fixture(scope="module", autouse=True)
def warmup_jit():
    solve_eta(Absorption.constant(1.0), 0.0, 1.0, 0.01, dt=0.001)
    sp = grid_space(RandersNorm.euclidean(1), [(0.0, 1.0)], 0.5, stencil=((1,), (-1,)))
    bnd = GridFunction.from_boundary(sp, [(0,), (2,)], [0.0, 1.0])
    solve_dirichlet(sp, bnd, Absorption.constant(0.1), SchemeConfig(max_iter=50))


def rim_of(sp):
    return [sp.node_ids[i] for i in np.nonzero(np.diff(sp.out_indptr) < np.diff(sp.out_indptr).max())[0]]


def random_solution(rng, g, h=1.0, half=5, beta_max=0.3, tol=1e-12):
    beta = rng.uniform(0.0, beta_max, 2)
    sp = grid_space(RandersNorm(np.eye(2), beta), [(-half * h, half * h)] * 2, h)
    rim = rim_of(sp)
    coords = sp.coords[sp.indices(rim)]
    a = rng.uniform(-1.0, 1.0, 2)
    kink = rng.uniform(-half * h, half * h, 2)
    vals = coords @ a + rng.uniform(-0.6, 0.6) * np.abs(coords - kink).sum(axis=1) \
        + rng.uniform(0.0, 0.25) * np.sin((coords * rng.uniform(1.0, 2.5, 2)).sum(axis=1))
    bnd = GridFunction.from_boundary(sp, rim, vals)
    state = solve_dirichlet(sp, bnd, g, SchemeConfig(tol=tol))
    assert state.converged
    return sp, state


def test_c01_eta_profile_exactness():
    t0 = time.perf_counter()
    worst_sup = 0.0
    worst_res = 0.0
    for c in (0.0, 0.5, 2.0):
        for b in (0.1, 1.0, 3.0):
            p = solve_eta(Absorption.constant(c), 0.0, b, 5.0)
            exact = b * p.t + 0.5 * c * p.t**2
            worst_sup = max(worst_sup, float(np.abs(p.eta - exact).max()))
            worst_res = max(worst_res, p.first_integral_residual())
    elapsed = time.perf_counter() - t0
    assert worst_sup <= 1e-9
    assert worst_res <= 1e-8
    assert elapsed < 1.0
    print(f"\n[criterion 1] PASS eta-profile exactness: sup-err {worst_sup:.2e} <= 1e-9, "
          f"residual {worst_res:.2e} <= 1e-8, runtime {elapsed:.2f}s < 1s")


def test_c02_sharp_theta_witness():
    # refinement-study methodology: the solve tolerance scales with h so the
    # iteration leftover refines along with the grid (the theta = 1/3 profile
    # is a cubic, hence an exact discrete fixed point, and a fixed tolerance
    # would otherwise dominate its sup-error)
    t0 = time.perf_counter()
    theta3 = 0.7
    cases = [ThetaCase(12.0, 0.5), ThetaCase(3.0, 1.0 / 3.0),
             ThetaCase(2.0 * (1.0 + theta3) / (1.0 - theta3) ** 2, theta3)]
    hs = (2.0**-6, 2.0**-7, 2.0**-8)
    t_grid = np.linspace(0.0, 1.0, 1001)
    orders = []
    for case in cases:
        assert case.profile_residual(t_grid) <= 1e-8
        errs = []
        for h in hs:
            rep = theta_liouville_check(case, h, SchemeConfig(tol=1e-6 * h**3, damping=0.5))
            assert rep["converged"]
            errs.append(rep["sup_error"])
        order = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
        orders.append(order)
        assert order >= 0.9
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    print(f"\n[criterion 2] PASS sharp theta witness: residuals <= 1e-8, observed orders "
          f"{['%.2f' % o for o in orders]} all >= 0.9, runtime {elapsed:.1f}s < 30s")


def test_c03_global_lipschitz_bound():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_ratio = 0.0
    h = 0.25
    for k in range(50):
        g = Absorption.zero() if k % 2 == 0 else Absorption.constant(1.0)
        sp, state = random_solution(rng, g, h=h, half=5, tol=1e-11)
        u = state.u
        boundary_ids = [sp.node_ids[i] for i in np.nonzero(u.boundary_mask)[0]]
        lip_all = lipschitz_constant(u, sp.node_ids, sp)
        lip_boundary = lipschitz_constant(u, boundary_ids, sp)
        integral = g.positive_part_integral(float(u.values.min()), float(u.values.max()))
        bound = math.sqrt(lip_boundary**2 + 2.0 * integral) * (1.0 + 10.0 * h)
        assert lip_all <= bound, f"problem {k}: Lip {lip_all} > bound {bound}"
        worst_ratio = max(worst_ratio, lip_all / bound)
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    print(f"\n[criterion 3] PASS global Lipschitz bound on 50 problems: worst ratio "
          f"{worst_ratio:.3f} <= 1, runtime {elapsed:.1f}s < 2min")


def test_c04_cone_comparison():
    rng = np.random.default_rng(7)
    worst_slack_ratio = 0.0
    worst_linear = 0.0
    n_linear = 0
    trials = 0
    solutions = []
    for k in range(8):
        g = Absorption.zero() if k % 2 == 0 else Absorption.constant(float(rng.uniform(0.3, 1.5)))
        h = 1.0 if k < 4 else 0.5
        sp, state = random_solution(rng, g, h=h, half=5, tol=1e-12)
        solutions.append((sp, state, g, h))
    while trials < 200:
        sp, state, g, h = solutions[trials % len(solutions)]
        u = state.u.values
        eps = state.epsilon
        n_half = 5
        i0 = rng.integers(-n_half + 2, n_half - 4, 2)
        K = [(int(i0[0]) + di, int(i0[1]) + dj) for di in range(3) for dj in range(3)]
        Kidx = set(sp.indices(K))
        ring = graph_boundary(sp, Kidx, eps)
        outside = [i for i in range(sp.n) if i not in Kidx and i not in ring]
        z = sp.node_ids[int(outside[rng.integers(0, len(outside))])]
        zi = sp.index(z)
        orientation = "forward" if rng.random() < 0.5 else "backward"
        b = float(rng.uniform(0.3, 2.0))
        u_star = float(u.min()) - 1e-9
        u_upper = float(u.max()) + 1e-9
        sign = 1.0 if orientation == "forward" else -1.0
        ring_arr = np.fromiter(ring, dtype=int)
        # raise (forward) or lower (backward) the vertex until the cone
        # dominates on the ring; one step suffices for forward cones by
        # convexity, backward cones may need a few
        vertex = float(u[zi])
        for _ in range(80):
            u_star = min(u_star, vertex)
            u_upper = max(u_upper, vertex)
            cone = make_cone(sp, z, b, g, vertex, orientation, u_star, u_upper)
            m = float((sign * (u - cone.values.values))[ring_arr].max())
            if m <= 0.0:
                break
            vertex += sign * (m + 1e-12)
        rep = check_cone_comparison(u, cone, K, tol=3.0 * eps * b, epsilon=eps)
        assert rep["premise_holds"], f"trial {trials}: cone does not dominate on the ring"
        assert rep["worst_violation"] <= 3.0 * eps * b
        worst_slack_ratio = max(worst_slack_ratio, rep["worst_violation"] / (3.0 * eps * b))
        if g.kind == "zero":
            n_linear += 1
            worst_linear = max(worst_linear, rep["worst_violation"])
        trials += 1
    assert worst_linear <= 1e-12, f"linear cones must have zero violations, got {worst_linear}"
    print(f"\n[criterion 4] PASS cone comparison on 200 triples: worst violation at "
          f"{worst_slack_ratio:.3f} of the 3*eps*b allowance; {n_linear} linear-cone trials "
          f"with worst violation {worst_linear:.1e} (exact)")


def test_c05_sup_convolution_inequality():
    rng = np.random.default_rng(99)
    worst = -math.inf
    for beta, half in (((0.0, 0.0), 8), ((0.3, 0.0), 12)):
        sp = grid_space(RandersNorm(np.eye(2), np.array(beta)), [(-half, half), (-half, half)], 1.0)
        rim = rim_of(sp)
        bnd = GridFunction.from_boundary(sp, rim, rng.uniform(0.0, 3.0, len(rim)))
        state = solve_dirichlet(sp, bnd, None, SchemeConfig(tol=1e-13))
        assert state.converged
        hop = sp.max_edge_weight
        for k in (1, 2, 3):
            eps = k * hop
            ue = sup_convolution(state.u, eps, "forward")
            eroded = ~ue.boundary_mask
            dbl = erode_mask(sp, eroded, eps, "forward") & erode_mask(sp, eroded, eps, "backward")
            assert dbl.any(), f"empty doubly-eroded domain at eps = {k} hops"
            for i in np.nonzero(dbl)[0]:
                node = sp.node_ids[i]
                gap = slope_minus(ue, node, eps) - slope_plus(ue, node, eps)
                worst = max(worst, gap)
                assert gap <= 1e-9
    print(f"\n[criterion 5] PASS sup-convolution inequality for eps in 1,2,3 hops: "
          f"worst S- - S+ = {worst:.2e} <= 1e-9")


def test_c06_completeness_dichotomy():
    t0 = time.perf_counter()
    xs = np.linspace(-0.5, 1.5, 401)
    g_lin = Absorption.from_table(xs, np.maximum(xs, 0.0))
    norm = RandersNorm.euclidean(2)
    unbounded = grid_exhaustion(norm, 1.0, radii=(5.0, 10.0, 20.0, 40.0),
                                core_radius=2.0, probe_band=(3.0, 4.0))
    bounded = bounded_incomplete_family(norm, 1.0, extent=12.0,
                                        radii=(5.0, 10.0, 20.0, 40.0),
                                        core_radius=2.0, probe_band=(3.0, 4.0))
    verdicts = {}
    for gname, g in (("zero", None), ("s_plus", g_lin)):
        rep_u = detect_completeness(unbounded, g)
        m = rep_u["probe_maxima"]
        assert rep_u["strictly_decreasing"], f"{gname}: probe maxima not strictly decreasing"
        assert m[-1] <= m[0] / 4.0
        rep_b = detect_completeness(bounded, g)
        mb = np.asarray(rep_b["probe_maxima"])
        assert np.max(np.abs(mb - mb[0])) <= 1e-9
        verdicts[gname] = (rep_u["verdict"], rep_b["verdict"])
    assert verdicts["zero"] == verdicts["s_plus"] == ("COMPLETE-LIKE", "INCOMPLETE-LIKE")
    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    print(f"\n[criterion 6] PASS completeness dichotomy: unbounded strictly decreasing with "
          f"m40 <= m5/4, bounded stable to 1e-9, verdicts agree across absorptions, "
          f"runtime {elapsed:.1f}s < 5min")


def test_c07_capacity_criterion():
    norm = RandersNorm.euclidean(2)
    fam = grid_exhaustion(norm, 1.0, radii=(4.0, 8.0, 16.0), core_radius=2.0)
    sp0, _ = fam.build(4.0)
    rho = forward_distance(sp0, [(0, 0)]).values
    K = [sp0.node_ids[i] for i in np.nonzero(rho <= 2.0)[0]]
    est = capacity(fam, K, inner_radius=2.0)
    for r, lip in zip(est.radii, est.lipschitz_numbers):
        assert abs(lip - 2.0 / r) <= 1e-12
    bounded = bounded_incomplete_family(norm, 1.0, extent=8.0, radii=(4.0,), core_radius=2.0)
    spb, rim = bounded.build(4.0)
    rho_b = forward_distance(spb, [(0, 0)]).values
    Kb = [spb.node_ids[i] for i in np.nonzero(rho_b <= 2.0)[0]]
    est_b = capacity(bounded, Kb, inner_radius=2.0)
    lb = est_b.analytic_lower_bound
    D = pairwise_distances(spb, spb.node_ids)
    lips = admissible_candidate_lipschitz(spb, Kb, rim, n_samples=10_000, seed=5, pair_distances=D)
    assert np.all(lips >= lb - 1e-9)
    print(f"\n[criterion 7] PASS capacity: candidate numbers equal R/r to machine precision "
          f"{est.lipschitz_numbers}; bounded model: 10^4 candidates all have Lip >= 1/D = {lb}"
          f" - 1e-9 (min found {lips.min():.4f})")


def test_c08_ekeland_certificates():
    rng = np.random.default_rng(31415)
    failures = 0
    for _ in range(1000):
        n = int(rng.integers(8, 45))
        sp = random_digraph(rng, n, float(rng.uniform(0.05, 0.3)))
        u = rng.uniform(0.0, 1.0, n)
        eps = float(rng.uniform(0.05, 0.9))
        delta = float(rng.uniform(0.1, 3.0))
        qual = np.nonzero(u > u.max() - eps)[0]
        x0 = int(qual[rng.integers(0, qual.size)])
        xbar, cert = ekeland_point(u, x0, eps, delta, sp)
        # exhaustive re-verification of the three inequalities
        xb = sp.index(xbar)
        d_bar = forward_distance(sp, [xbar]).values
        d_x0 = forward_distance(sp, [x0]).values
        ok = u[xb] >= u[x0] and d_x0[xb] <= delta + 1e-12
        slope = eps / delta
        for y in range(n):
            if math.isfinite(d_bar[y]) and u[y] > u[xb] + slope * d_bar[y] + 1e-12:
                ok = False
        if not (ok and cert["valid"]):
            failures += 1
    assert failures == 0
    print("\n[criterion 8] PASS Ekeland certificates: 1000/1000 instances exhaustively verified, "
          "zero failures")


def test_c09_maximum_principles():
    rng = np.random.default_rng(555)
    worst_gap_ratio = -math.inf
    xs = np.linspace(-0.5, 2.5, 301)
    s_plus = Absorption.from_table(xs, np.maximum(xs, 0.0))
    states = []
    for k in range(12):
        g = (None, Absorption.constant(1.0), s_plus)[k % 3]
        beta = rng.uniform(0.0, 0.3, 2)
        sp = grid_space(RandersNorm(np.eye(2), beta), [(-4, 4), (-4, 4)], 1.0)
        rim = rim_of(sp)
        bnd = GridFunction.from_boundary(sp, rim, rng.uniform(0.0, 2.0, len(rim)))
        state = solve_dirichlet(sp, bnd, g, SchemeConfig(tol=1e-12))
        states.append((sp, state, g))
    # the shipped 1D power-absorption solves participate as well
    for lam, theta in ((12.0, 0.5), (3.0, 1.0 / 3.0)):
        case = ThetaCase(lam, theta)
        n = 64
        sp = grid_space(RandersNorm.euclidean(1), [(0.0, 1.0)], 1.0 / n, stencil=((1,), (-1,)))
        bnd = GridFunction.from_boundary(sp, [(0,), (n,)], [0.0, case.tau])
        state = solve_dirichlet(sp, bnd, Absorption.power(lam, theta),
                                SchemeConfig(tol=1e-12, damping=0.5))
        states.append((sp, state, Absorption.power(lam, theta)))
    for sp, state, g in states:
        assert state.converged
        u = state.u
        lip = lipschitz_constant(u, sp.node_ids, sp)
        tol = 2.0 * state.epsilon * lip
        interior_ids = [sp.node_ids[i] for i in u.interior_indices()]
        rep = wmp_check(u, interior_ids, g, tol, state.epsilon)
        assert rep["holds"]
        worst_gap_ratio = max(worst_gap_ratio, rep["gap"] / tol if tol > 0 else 0.0)
        interior = u.interior_indices()
        constant = u.values.max() - u.values.min() <= 1e-12
        if not constant:
            # subsolution half of the strong principle: no interior max
            assert u.values[interior].max() <= u.boundary_values.max() + 1e-10
            if g is None:
                # supersolution half applies only to the homogeneous case
                # (g > 0 solutions may legitimately dip below the boundary)
                assert u.values[interior].min() >= u.boundary_values.min() - 1e-10
    print(f"\n[criterion 9] PASS maximum principles on {len(states)} configs: wmp gaps at most "
          f"{worst_gap_ratio:.2e} of the 2*eps*Lip slack; extrema attained on the boundary")


def test_c10_determinism(tmp_path):
    configs = [
        ("eta", {"absorption": {"kind": "constant", "c": 0.5},
                 "eta": {"u_star": 0.0, "b": 1.0, "span": 3.0, "dt": 0.0005}, "seed": 1}),
        ("solve", {"space": {"kind": "grid", "bounds": [[-2, 2], [-2, 2]], "h": 0.5,
                             "norm": {"A": [[1, 0], [0, 1]], "beta": [0.2, 0.0]}},
                   "absorption": {"kind": "constant", "c": 0.3},
                   "scheme": {"tol": 1e-11},
                   "boundary": {"kind": "random-lipschitz"}, "seed": 9}),
        ("detect-completeness", {"completeness": {"model": "bounded-layer", "radii": [4, 6],
                                                  "core_radius": 2.0, "probe": [3.0, 4.0],
                                                  "extent": 6.0}, "seed": 2}),
        ("ekeland", {"ekeland": {"nodes": 30, "edge_prob": 0.2, "eps": 0.5, "delta": 1.5,
                                 "instances": 10}, "seed": 4}),
    ]
    n_files = 0
    for name, cfg in configs:
        out1 = tmp_path / f"{name}-1"
        out2 = tmp_path / f"{name}-2"
        assert run(name, cfg, out1) == 0
        assert run(name, cfg, out2) == 0
        for p1 in sorted(out1.iterdir()):
            p2 = out2 / p1.name
            assert p1.read_bytes() == p2.read_bytes(), f"{name}/{p1.name} differs between runs"
            n_files += 1
    print(f"\n[criterion 10] PASS determinism: {n_files} artifacts byte-identical across "
          "repeated runs of 4 configs")
