"""Completeness detector, maximum principles, capacity, point finder."""

import math

import numpy as np
import pytest

from infpot import (
    Absorption,
    GridFunction,
    InputError,
    RandersNorm,
    SchemeConfig,
    ThetaCase,
    bounded_incomplete_family,
    capacity,
    detect_completeness,
    eikonal_wmp_check,
    ekeland_point,
    forward_distance,
    grid_exhaustion,
    grid_space,
    lipschitz_constant,
    local_lipschitz_check,
    make_cone,
    solve_dirichlet,
    theta_liouville_check,
    wmp_check,
)
from infpot.principles import admissible_candidate_lipschitz
from conftest import random_connected_digraph


@pytest.fixture(scope="module")
def small_unbounded_family():
    return grid_exhaustion(RandersNorm.euclidean(2), 1.0, radii=(5.0, 10.0, 20.0),
                           core_radius=2.0, probe_band=(3.0, 4.0))


@pytest.fixture(scope="module")
def bounded_family():
    return bounded_incomplete_family(RandersNorm.euclidean(2), 1.0, extent=8.0,
                                     radii=(5.0, 10.0, 20.0), core_radius=2.0,
                                     probe_band=(3.0, 4.0))


class TestDetectCompleteness:
    def test_unbounded_probe_maxima_decay(self, small_unbounded_family):
        rep = detect_completeness(small_unbounded_family, None)
        assert rep["verdict"] == "COMPLETE-LIKE"
        assert rep["strictly_decreasing"]
        # 1D analogue of the radial solution: m = (probe - core)/(r - core)
        for r, m in zip(rep["radii"], rep["probe_maxima"]):
            assert m == pytest.approx(2.0 / (r - 2.0), abs=1e-7)

    def test_bounded_model_is_stable(self, bounded_family):
        rep = detect_completeness(bounded_family, None)
        assert rep["verdict"] == "INCOMPLETE-LIKE"
        m = np.asarray(rep["probe_maxima"])
        assert np.max(np.abs(m - m[0])) <= 1e-9
        assert m[0] > 0.1

    def test_verdicts_agree_between_absorptions(self, small_unbounded_family, bounded_family):
        xs = np.linspace(-0.5, 1.5, 201)
        gs = Absorption.from_table(xs, np.maximum(xs, 0.0))
        for fam in (small_unbounded_family, bounded_family):
            v0 = detect_completeness(fam, None)["verdict"]
            vs = detect_completeness(fam, gs)["verdict"]
            assert v0 == vs

    def test_degenerate_first_truncation(self):
        fam = grid_exhaustion(RandersNorm.euclidean(2), 1.0, radii=(3.0, 6.0),
                              core_radius=2.0, probe_band=(2.5, 3.0))
        rep = detect_completeness(fam, None)
        # radius 3 leaves the annulus = the rim itself: boundary dominates
        assert rep["probe_maxima"][0] == pytest.approx(1.0)

    def test_decreasing_g_rejected(self, small_unbounded_family):
        xs = np.linspace(0.0, 1.0, 11)
        g = Absorption.from_table(xs, 1.0 - xs)
        with pytest.raises(InputError):
            detect_completeness(small_unbounded_family, g)

    def test_spike_model_is_incomplete_like(self):
        fam = bounded_incomplete_family(RandersNorm.euclidean(2), 1.0, extent=8.0,
                                        radii=(5.0, 10.0), core_radius=2.0,
                                        probe_band=(3.0, 4.0), spike=True)
        sp, rim = fam.build(5.0)
        assert (7, 0) not in sp.node_ids  # spike nodes deleted
        assert (3, 1) in rim or (3, 0) in rim  # rim hugs the deleted half-line
        rep = detect_completeness(fam, None)
        assert rep["verdict"] == "INCOMPLETE-LIKE"


class TestWmpCheck:
    def test_converged_solution_gap_within_slack(self):
        sp = grid_space(RandersNorm(np.eye(2), np.array([0.2, 0.0])), [(-3, 3), (-3, 3)], 1.0)
        rim = [sp.node_ids[i] for i in np.nonzero(np.diff(sp.out_indptr) < 4)[0]]
        rng = np.random.default_rng(0)
        bnd = GridFunction.from_boundary(sp, rim, rng.uniform(0.0, 1.0, len(rim)))
        st = solve_dirichlet(sp, bnd, Absorption.constant(0.1), SchemeConfig(tol=1e-12))
        interior = [sp.node_ids[i] for i in st.u.interior_indices()]
        lip = lipschitz_constant(st.u, sp.node_ids, sp)
        rep = wmp_check(st.u, interior, Absorption.constant(0.1), 2.0 * st.epsilon * lip, st.epsilon)
        assert rep["holds"]
        assert rep["gap"] <= 1e-10  # fixed points attain the sup on the boundary

    def test_constant_function_zero_gap(self, unit_grid_5x5):
        u = GridFunction.constant(unit_grid_5x5, 1.0)
        region = [n for n in unit_grid_5x5.node_ids if abs(n[0]) <= 1 and abs(n[1]) <= 1]
        rep = wmp_check(u, region, Absorption.zero(), 1e-12)
        assert rep["gap"] == 0.0
        assert rep["holds"]

    def test_interior_bump_rejected_as_non_subsolution(self, unit_grid_5x5):
        sp = unit_grid_5x5
        u = GridFunction.constant(sp, 0.0)
        u.values[sp.index((0, 0))] = 1.0
        region = [n for n in sp.node_ids if abs(n[0]) <= 1 and abs(n[1]) <= 1]
        with pytest.raises(InputError):
            wmp_check(u, region, Absorption.zero(), 1e-9)


class TestTheta:
    def test_normalized_lambda_gives_unit_tau(self):
        for theta in (0.3, 0.5, 0.7):
            lam = 2.0 * (1.0 + theta) / (1.0 - theta) ** 2
            assert ThetaCase(lam, theta).tau == pytest.approx(1.0)

    def test_known_cases(self):
        assert ThetaCase(12.0, 0.5).tau == pytest.approx(1.0)
        assert ThetaCase(12.0, 0.5).exponent == pytest.approx(4.0)
        assert ThetaCase(3.0, 1.0 / 3.0).exponent == pytest.approx(3.0)

    def test_witness_residual_vanishes(self):
        t = np.linspace(0.0, 1.0, 501)
        for lam, theta in [(12.0, 0.5), (3.0, 1.0 / 3.0), (5.0, 0.7)]:
            assert ThetaCase(lam, theta).profile_residual(t) <= 1e-8

    def test_discrete_solution_reproduces_profile(self):
        rep = theta_liouville_check(ThetaCase(12.0, 0.5), 1.0 / 64.0)
        assert rep["converged"]
        assert rep["sup_error"] <= 1e-3
        assert rep["witness_residual"] <= 1e-8

    def test_invalid_parameters_rejected(self):
        with pytest.raises(InputError):
            ThetaCase(0.0, 0.5)
        with pytest.raises(InputError):
            ThetaCase(1.0, 1.2)


class TestCapacity:
    def test_candidate_numbers_exact(self, small_unbounded_family):
        fam = grid_exhaustion(RandersNorm.euclidean(2), 1.0, radii=(4.0, 8.0, 16.0), core_radius=2.0)
        sp0, _ = fam.build(4.0)
        rho = forward_distance(sp0, [(0, 0)]).values
        K = [sp0.node_ids[i] for i in np.nonzero(rho <= 2.0)[0]]
        est = capacity(fam, K, inner_radius=2.0)
        assert est.lipschitz_numbers == pytest.approx((0.5, 0.25, 0.125), abs=1e-12)
        assert est.slope_sups == pytest.approx((0.5, 0.25, 0.125), abs=1e-12)
        assert est.extrapolated_infimum <= 1e-12

    def test_radius_not_exceeding_inner_rejected(self):
        fam = grid_exhaustion(RandersNorm.euclidean(2), 1.0, radii=(2.0, 4.0), core_radius=2.0)
        sp0, _ = fam.build(2.0)
        K = [(0, 0)]
        with pytest.raises(InputError):
            capacity(fam, K, inner_radius=2.0)

    def test_bounded_model_lower_bound(self, bounded_family):
        sp, rim = bounded_family.build(5.0)
        rho = forward_distance(sp, [(0, 0)]).values
        K = [sp.node_ids[i] for i in np.nonzero(rho <= 2.0)[0]]
        est = capacity(bounded_family, K, inner_radius=2.0)
        assert est.analytic_lower_bound is not None
        D = 1.0 / est.analytic_lower_bound
        lips = admissible_candidate_lipschitz(sp, K, rim, n_samples=200, seed=3)
        assert np.all(lips >= 1.0 / D - 1e-9)


class TestEkeland:
    def test_global_maximizer_is_fixed(self):
        rng = np.random.default_rng(1)
        sp = random_connected_digraph(rng, 20)
        u = rng.uniform(0.0, 1.0, 20)
        x0 = int(np.argmax(u))
        xbar, cert = ekeland_point(u, x0, 0.5, 1.0, sp)
        assert xbar == x0
        assert cert["valid"]

    @pytest.mark.parametrize("seed", range(12))
    def test_random_instances_certified(self, seed):
        rng = np.random.default_rng(seed)
        sp = random_connected_digraph(rng, 50, edge_prob=0.1)
        u = rng.uniform(0.0, 1.0, 50)
        eps = float(rng.uniform(0.05, 0.8))
        delta = float(rng.uniform(0.2, 3.0))
        qual = np.nonzero(u > u.max() - eps)[0]
        x0 = int(qual[rng.integers(0, qual.size)])
        xbar, cert = ekeland_point(u, x0, eps, delta, sp)
        assert cert["valid"]
        # re-verify the three inequalities independently of the certificate
        d_bar = forward_distance(sp, [xbar]).values
        d_x0 = forward_distance(sp, [x0]).values
        assert u[sp.index(xbar)] >= u[x0]
        assert d_x0[sp.index(xbar)] <= delta + 1e-12
        slope = eps / delta
        for y in range(50):
            if math.isfinite(d_bar[y]):
                assert u[y] <= u[sp.index(xbar)] + slope * d_bar[y] + 1e-12

    def test_two_node_instance(self, two_node_space):
        eps = 0.5
        u = np.array([0.0, 1.0 - eps / 2.0])
        xbar, cert = ekeland_point(u, "b", eps, 2.0, two_node_space)
        assert xbar == "b"
        assert cert["valid"]

    def test_precondition_rejected(self):
        rng = np.random.default_rng(2)
        sp = random_connected_digraph(rng, 10)
        u = np.linspace(0.0, 1.0, 10)
        with pytest.raises(InputError):
            ekeland_point(u, 0, 0.5, 1.0, sp)  # u(x0)=0 <= sup - eps


class TestEikonalWmp:
    def _annulus(self, half=4, cap=3.0):
        sp = grid_space(RandersNorm.euclidean(2), [(-half, half), (-half, half)], 1.0)
        rho = forward_distance(sp, [(0, 0)]).values
        omega = [sp.node_ids[i] for i in range(sp.n) if 0 < rho[i] < cap]
        return sp, rho, omega

    def test_distance_field_gap_within_slack(self):
        sp, rho, omega = self._annulus()
        u = GridFunction(sp, np.minimum(rho, 3.0), np.zeros(sp.n, dtype=bool))
        rep = eikonal_wmp_check(u, omega, 1.0, 1e-9)
        assert rep["holds"]

    def test_constant_rejected(self):
        sp, rho, omega = self._annulus()
        u = GridFunction.constant(sp, 0.0)
        with pytest.raises(InputError):
            eikonal_wmp_check(u, omega, 1.0, 1e-9)

    def test_transformed_subsolution_accepted(self):
        # v = arctan(u) turns a G-eikonal subsolution into a unit one; the
        # inverse transform tan of a slope-1 field is a subsolution for
        # G(s) = 1 + s^2 by convexity of tan on [0, pi/2)
        sp, rho, omega = self._annulus(half=3, cap=1.4)  # keep tan arguments < pi/2
        u = GridFunction(sp, np.tan(np.minimum(rho, 1.4)), np.zeros(sp.n, dtype=bool))
        G = lambda s: 1.0 + s * s
        rep = eikonal_wmp_check(u, omega, G, 1e-9)
        assert rep["holds"]


class TestLocalLipschitz:
    def test_converged_state_margin_within_slack(self):
        sp = grid_space(RandersNorm.euclidean(2), [(-4, 4), (-4, 4)], 1.0)
        rim = [sp.node_ids[i] for i in np.nonzero(np.diff(sp.out_indptr) < 4)[0]]
        rng = np.random.default_rng(7)
        bnd = GridFunction.from_boundary(sp, rim, rng.uniform(0.0, 1.0, len(rim)))
        st = solve_dirichlet(sp, bnd, None, SchemeConfig(tol=1e-12))
        rep = local_lipschitz_check(st.u, sp, (0, 0), 3.0, c=0.0, slack=1e-9)
        assert rep["holds"]

    def test_linear_cone_achieves_equality_at_sphere(self):
        sp = grid_space(RandersNorm.euclidean(2), [(-4, 4), (-4, 4)], 1.0)
        cone = make_cone(sp, (0, 0), 0.8, Absorption.zero(), 0.0, "forward", 0.0, 100.0)
        # band 0.25 selects exactly the d = 3 level set on the unit grid
        rep = local_lipschitz_check(cone.values.values, sp, (0, 0), 3.0, c=0.0,
                                    band=0.25, slack=1e-12)
        assert rep["holds"]
        assert rep["worst_margin"] == pytest.approx(0.0, abs=1e-12)
        # the default band includes the d = 4 layer and only strengthens rhs
        rep2 = local_lipschitz_check(cone.values.values, sp, (0, 0), 3.0, c=0.0, slack=1e-12)
        assert rep2["holds"]

    def test_constant_function(self):
        sp = grid_space(RandersNorm.euclidean(2), [(-4, 4), (-4, 4)], 1.0)
        u = np.zeros(sp.n)
        rep = local_lipschitz_check(u, sp, (0, 0), 3.0, c=0.0)
        assert rep["holds"]
        assert rep["worst_margin"] == 0.0

    def test_ball_leaving_domain_rejected(self):
        sp = grid_space(RandersNorm.euclidean(2), [(-2, 2), (-2, 2)], 1.0)
        rim = [sp.node_ids[i] for i in np.nonzero(np.diff(sp.out_indptr) < 4)[0]]
        bnd = GridFunction.from_boundary(sp, rim, np.zeros(len(rim)))
        with pytest.raises(InputError):
            local_lipschitz_check(bnd, sp, (0, 0), 2.5, c=0.0)
