import math

import numpy as np
import pytest

from conftest import random_connected_topology

from aoinet import _kernels
from aoinet.analysis import ObjectiveKind
from aoinet.graph import (
    Topology,
    make_asym_circle6,
    make_complete,
    make_grid,
    make_line,
    make_ring,
    make_star,
    make_tree6,
)
from aoinet.optimizer import (
    SolveOptions,
    StarSolution,
    _leaf_equation,
    brute_force_grid,
    d_regular_closed_form,
    solve_fixed_point,
    solve_projected_gradient,
    star_polynomial_check,
    star_solve,
)

GOLDEN = (3.0 - math.sqrt(5.0)) / 2.0


class TestSolveOptions:
    def test_validation(self):
        with pytest.raises(ValueError):
            SolveOptions(max_iters=0)
        with pytest.raises(ValueError):
            SolveOptions(tol_grad=0.0)
        with pytest.raises(ValueError):
            SolveOptions(damping=1.5)
        with pytest.raises(ValueError):
            SolveOptions(epsilon_lo=0.6)


class TestProjectedGradient:
    def test_two_node(self):
        res = solve_projected_gradient(make_line(2), 1.0)
        assert res.converged
        assert np.allclose(res.q_star, 0.5, atol=1e-8)
        assert res.objective_value == pytest.approx(8.0, rel=1e-12)

    def test_ring6(self):
        res = solve_projected_gradient(make_ring(6), 1.0)
        assert res.converged
        assert np.allclose(res.q_star, 1.0 / 3.0, atol=1e-9)

    def test_line7_wavelike_profile(self):
        res = solve_projected_gradient(make_line(7), 1.0)
        assert res.converged
        expect = np.array([0.36, 0.35, 0.34, 0.34, 0.34, 0.35, 0.36])
        assert np.all(np.abs(res.q_star - expect) <= 0.01)
        # symmetric profile, highest at the endpoints
        assert np.allclose(res.q_star, res.q_star[::-1], atol=1e-7)

    def test_upper_clamp_with_small_p(self):
        # p(d+1) = 0.6 < 1 forces the boundary optimum q = 1
        res = solve_projected_gradient(make_complete(3), 0.2)
        assert res.converged
        assert np.allclose(res.q_star, 1.0, atol=1e-9)
        assert math.isfinite(res.objective_value)

    def test_no_edges_trivial(self):
        res = solve_projected_gradient(Topology(3, ()), 1.0)
        assert res.converged
        assert np.all(res.q_star == 0.0) and res.objective_value == 0.0

    def test_isolated_node_reported_zero(self):
        t = Topology(3, ((0, 1),))
        res = solve_projected_gradient(t, 1.0)
        assert res.q_star[2] == 0.0
        assert np.allclose(res.q_star[:2], 0.5, atol=1e-8)

    def test_p_zero_with_neighbors_rejected(self):
        with pytest.raises(ValueError, match="p=0"):
            solve_projected_gradient(make_line(2), np.array([0.0, 1.0]))

    def test_nonconvergence_returns_result(self):
        far = np.full(7, 0.9)
        res = solve_projected_gradient(
            make_line(7), 1.0,
            opts=SolveOptions(max_iters=2, tol_grad=1e-12, initial_q=far))
        assert not res.converged
        assert res.iterations == 2

    def test_initial_q_respected(self):
        res = solve_projected_gradient(
            make_ring(6), 1.0, opts=SolveOptions(initial_q=np.full(6, 0.9)))
        assert res.converged
        assert np.allclose(res.q_star, 1.0 / 3.0, atol=1e-8)


class TestFixedPoint:
    def test_two_node(self):
        res = solve_fixed_point(make_line(2), 1.0)
        assert res.converged
        assert np.allclose(res.q_star, 0.5, atol=1e-10)

    def test_ring6(self):
        res = solve_fixed_point(make_ring(6), 1.0)
        assert res.converged
        assert np.allclose(res.q_star, 1.0 / 3.0, atol=1e-10)
        assert res.fp_residual <= 1e-10

    def test_complete4(self):
        res = solve_fixed_point(make_complete(4), 1.0)
        assert res.converged
        assert np.allclose(res.q_star, 0.25, atol=1e-10)

    def test_upper_clamp_with_small_p(self):
        res = solve_fixed_point(make_complete(3), 0.2)
        assert res.converged
        assert np.allclose(res.q_star, 1.0, atol=1e-9)

    def test_matches_projected_gradient(self):
        topologies = [make_line(7), make_star(6), make_tree6(),
                      make_grid(2, 3), make_asym_circle6()]
        for t in topologies:
            for kind in ObjectiveKind:
                a = solve_projected_gradient(t, 1.0, kind)
                b = solve_fixed_point(t, 1.0, kind)
                assert a.converged and b.converged
                assert np.max(np.abs(a.q_star - b.q_star)) < 1e-5, t

    def test_stationarity_residual_at_solution(self):
        res = solve_fixed_point(make_tree6(), 1.0)
        assert res.fp_residual < 1e-10


class TestDRegularClosedForm:
    def test_values(self):
        assert d_regular_closed_form(2, 1.0) == pytest.approx(1.0 / 3.0, rel=1e-15)
        assert d_regular_closed_form(1, 1.0) == 0.5
        assert d_regular_closed_form(3, 0.2) == 1.0  # 1/(0.2*4) = 1.25, clamped

    def test_errors(self):
        with pytest.raises(ValueError):
            d_regular_closed_form(0, 1.0)
        with pytest.raises(ValueError):
            d_regular_closed_form(2, 0.0)

    @pytest.mark.parametrize("maker,n,d", [(make_ring, 3, 2), (make_ring, 6, 2),
                                           (make_ring, 10, 2), (make_complete, 3, 2),
                                           (make_complete, 4, 3), (make_complete, 5, 4)])
    @pytest.mark.parametrize("p", [1.0, 0.5])
    def test_general_solvers_agree(self, maker, n, d, p):
        expect = d_regular_closed_form(d, p)
        for solver in (solve_projected_gradient, solve_fixed_point):
            res = solver(maker(n), p)
            assert res.converged
            assert np.max(np.abs(res.q_star - expect)) < 1e-6

    def test_halving_p_doubles_q_until_clamped(self):
        t = make_ring(6)
        full = solve_fixed_point(t, 1.0).q_star
        half = solve_fixed_point(t, 0.5).q_star
        assert np.allclose(half, 2 * full, atol=1e-8)


class TestStarSolve:
    def test_two_node_exact(self):
        assert star_solve(2) == StarSolution(0.5, 0.5)

    def test_three_node_golden(self):
        sol = star_solve(3)
        assert sol.q1 == pytest.approx(GOLDEN, abs=1e-9)
        assert sol.q2 == pytest.approx(GOLDEN, abs=1e-9)

    @pytest.mark.parametrize("n", range(4, 31))
    def test_equation_residuals(self, n):
        sol = star_solve(n)
        assert 0.0 < sol.q2 < 1.0 / (n - 1)
        assert abs(_leaf_equation(n, sol.q2)) < 1e-10
        hub_lhs = sol.q1 ** 2
        hub_rhs = sol.q2 * (1 - sol.q1) ** 2 * (1 - sol.q2) ** (n - 3)
        assert abs(hub_lhs - hub_rhs) < 1e-10

    def test_matches_general_solver(self):
        sol = star_solve(6)
        res = solve_projected_gradient(make_star(6), 1.0)
        assert res.converged
        assert res.q_star[0] == pytest.approx(sol.q1, abs=1e-4)
        assert np.ptp(res.q_star[1:]) < 1e-6  # leaves tie by symmetry
        assert res.q_star[1] == pytest.approx(sol.q2, abs=1e-4)

    def test_monotone_decreasing_and_ordered(self):
        sols = [star_solve(n) for n in range(3, 31)]
        q1s = [s.q1 for s in sols]
        q2s = [s.q2 for s in sols]
        assert all(a > b for a, b in zip(q1s, q1s[1:]))
        assert all(a > b for a, b in zip(q2s, q2s[1:]))
        assert all(s.q2 < s.q1 for s in sols[1:])  # n > 3

    def test_rejects_tiny(self):
        with pytest.raises(ValueError):
            star_solve(1)


class TestStarPolynomialCheck:
    @pytest.mark.parametrize("n", [4, 6, 12, 30])
    def test_residual_at_root(self, n):
        sol = star_solve(n)
        assert abs(star_polynomial_check(n, sol.q2)) < 1e-9

    def test_at_zero(self):
        assert star_polynomial_check(5, 0.0) == -1.0

    def test_domain(self):
        with pytest.raises(ValueError):
            star_polynomial_check(3, 0.5)
        with pytest.raises(ValueError):
            star_polynomial_check(5, 1.0)


class TestBruteForceGrid:
    def test_two_node_fine_grid(self):
        q, f = brute_force_grid(make_line(2), 1.0, resolution=1000)
        assert np.allclose(q, 0.5)
        assert f == pytest.approx(8.0, rel=1e-12)

    def test_line3_cross_oracle(self):
        t = make_line(3)
        _, f_grid = brute_force_grid(t, 1.0, resolution=500)
        res = solve_projected_gradient(t, 1.0)
        assert abs(f_grid - res.objective_value) < 1e-3
        assert res.objective_value <= f_grid * (1 + 1e-12)

    def test_star3_golden(self):
        q, _ = brute_force_grid(make_star(3), 1.0, resolution=500)
        assert np.allclose(q, 0.382, atol=1e-12)  # nearest grid point to GOLDEN

    def test_small_p_admits_boundary(self):
        q, f = brute_force_grid(make_complete(3), 0.2, resolution=50)
        assert np.allclose(q, 1.0)
        assert math.isfinite(f)

    def test_budget_refusal(self):
        with pytest.raises(ValueError, match="budget"):
            brute_force_grid(make_complete(4), 1.0, resolution=200,
                             cell_budget=10_000)

    def test_resolution_floor(self):
        with pytest.raises(ValueError):
            brute_force_grid(make_line(2), 1.0, resolution=2)

    def test_isolated_node_pinned(self):
        t = Topology(3, ((0, 1),))
        q, _ = brute_force_grid(t, 1.0, resolution=100)
        assert q[2] == 0.0
        assert np.allclose(q[:2], 0.5)

    @pytest.mark.skipif(not _kernels.HAVE_COMPILED,
                        reason="compiled kernel unavailable")
    @pytest.mark.parametrize("t", [make_line(3), make_star(4), make_ring(4)])
    def test_backends_identical(self, t):
        a = brute_force_grid(t, 1.0, resolution=25, backend="compiled")
        b = brute_force_grid(t, 1.0, resolution=25, backend="numpy")
        assert np.array_equal(a[0], b[0])
        assert a[1] == b[1]

    @pytest.mark.skipif(not _kernels.HAVE_COMPILED,
                        reason="compiled kernel unavailable")
    def test_backends_identical_with_small_p(self):
        t = make_ring(4)
        a = brute_force_grid(t, 0.7, resolution=20, backend="compiled",
                             kind=ObjectiveKind.NEIGHBOR_NORMALIZED)
        b = brute_force_grid(t, 0.7, resolution=20, backend="numpy",
                             kind=ObjectiveKind.NEIGHBOR_NORMALIZED)
        assert np.array_equal(a[0], b[0])
        assert a[1] == b[1]


class TestOracleEquivalence:
    @pytest.mark.parametrize("t", [make_line(4), make_star(4), make_ring(4),
                                   make_grid(2, 2)])
    def test_grid_argmin_near_solver(self, t):
        res = solve_projected_gradient(t, 1.0)
        q_grid, f_grid = brute_force_grid(t, 1.0, resolution=60)
        assert res.objective_value <= f_grid * (1 + 1e-12)
        assert np.max(np.abs(q_grid - res.q_star)) <= 1.0 / 60 + 1e-12

    def test_random_connected_agreement(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            t = random_connected_topology(rng, 4)
            res = solve_projected_gradient(t, 1.0)
            q_grid, f_grid = brute_force_grid(t, 1.0, resolution=60)
            assert res.objective_value <= f_grid * (1 + 1e-12)
            assert np.max(np.abs(q_grid - res.q_star)) <= 1.0 / 60 + 1e-12
