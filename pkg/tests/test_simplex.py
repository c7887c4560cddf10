"""Tests for the exact simplex-QP solver against its brute-force oracle."""

import numpy as np
import pytest

from agle.simplex import SimplexProblem, kkt_residual, oracle_solve, solve_simplex


def random_problem(rng) -> SimplexProblem:
    n = int(rng.integers(2, 13))
    costs = rng.uniform(-5.0, 5.0, size=n)
    gamma = float(rng.uniform(0.1, 100.0))
    return SimplexProblem(costs, gamma)


class TestSolveSimplex:
    def test_uniform_costs_give_uniform_weights(self):
        sol = solve_simplex(SimplexProblem(np.array([1.0, 1.0, 1.0]), 1.0))
        np.testing.assert_allclose(sol.weights, np.full(3, 1.0 / 3.0), atol=1e-15)
        assert set(sol.support.tolist()) == {0, 1, 2}

    def test_two_costs_split(self):
        # Oracle-confirmed: threshold starts at 1.5, both costs below it.
        sol = solve_simplex(SimplexProblem(np.array([0.0, 1.0]), 1.0))
        np.testing.assert_allclose(sol.weights, [0.75, 0.25], atol=1e-15)
        assert sol.iterations == 0
        assert sol.threshold == pytest.approx(1.5)
        oracle = oracle_solve(SimplexProblem(np.array([0.0, 1.0]), 1.0))
        np.testing.assert_allclose(oracle.weights, sol.weights, atol=1e-12)

    def test_distant_cost_dropped(self):
        # Oracle-confirmed: first threshold 6 excludes the cost of 10,
        # second threshold 2 is the fixed point.
        sol = solve_simplex(SimplexProblem(np.array([0.0, 10.0]), 1.0))
        np.testing.assert_allclose(sol.weights, [1.0, 0.0], atol=1e-15)
        assert sol.iterations == 1
        assert sol.threshold == pytest.approx(2.0)
        np.testing.assert_allclose(sol.thresholds, [6.0, 2.0])
        oracle = oracle_solve(SimplexProblem(np.array([0.0, 10.0]), 1.0))
        np.testing.assert_allclose(oracle.weights, sol.weights, atol=1e-12)

    def test_solution_invariants(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            problem = random_problem(rng)
            sol = solve_simplex(problem)
            assert np.min(sol.weights) >= 0.0
            assert abs(sol.weights.sum() - 1.0) <= 1e-12
            positive = np.flatnonzero(sol.weights > 0.0)
            np.testing.assert_array_equal(positive, sol.support)
            np.testing.assert_array_equal(
                np.flatnonzero(problem.costs < sol.threshold), sol.support
            )

    def test_threshold_sequence_nonincreasing(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            sol = solve_simplex(random_problem(rng))
            assert np.all(np.diff(sol.thresholds) <= 0.0)

    def test_terminates_within_n_rounds(self):
        rng = np.random.default_rng(13)
        for _ in range(300):
            problem = random_problem(rng)
            sol = solve_simplex(problem)
            assert sol.iterations <= problem.size

    def test_shift_invariance(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            problem = random_problem(rng)
            shift = float(rng.uniform(-10.0, 10.0))
            base = solve_simplex(problem)
            shifted = solve_simplex(SimplexProblem(problem.costs + shift, problem.gamma))
            np.testing.assert_allclose(shifted.weights, base.weights, atol=1e-12)

    def test_support_grows_with_gamma(self):
        rng = np.random.default_rng(19)
        for _ in range(100):
            costs = rng.uniform(-5.0, 5.0, size=int(rng.integers(2, 13)))
            sizes = [
                solve_simplex(SimplexProblem(costs, g)).support.size
                for g in np.sort(rng.uniform(0.05, 50.0, size=5))
            ]
            assert all(a <= b for a, b in zip(sizes, sizes[1:]))

    def test_single_entry(self):
        sol = solve_simplex(SimplexProblem(np.array([5.0]), 2.0))
        np.testing.assert_allclose(sol.weights, [1.0])

    @pytest.mark.parametrize(
        "costs,gamma",
        [([], 1.0), ([np.nan, 0.0], 1.0), ([np.inf], 1.0), ([0.0, 1.0], 0.0), ([0.0], -2.0)],
    )
    def test_invalid_inputs_rejected(self, costs, gamma):
        with pytest.raises(ValueError):
            SimplexProblem(np.asarray(costs, dtype=float), gamma)


class TestOracle:
    def test_uniform(self):
        sol = oracle_solve(SimplexProblem(np.array([1.0, 1.0, 1.0]), 1.0))
        np.testing.assert_allclose(sol.weights, np.full(3, 1.0 / 3.0), atol=1e-12)

    def test_single_variable_forced(self):
        sol = oracle_solve(SimplexProblem(np.array([5.0]), 2.0))
        np.testing.assert_allclose(sol.weights, [1.0])

    def test_size_cap(self):
        with pytest.raises(ValueError):
            oracle_solve(SimplexProblem(np.zeros(21), 1.0))

    def test_matches_fast_solver_on_random_instances(self):
        rng = np.random.default_rng(23)
        for _ in range(500):
            problem = random_problem(rng)
            fast = solve_simplex(problem)
            slow = oracle_solve(problem)
            assert abs(fast.objective(problem) - slow.objective(problem)) <= 1e-10
            np.testing.assert_allclose(fast.weights, slow.weights, atol=1e-8)


class TestKKTResidual:
    def test_zero_at_solver_output(self):
        sol = solve_simplex(SimplexProblem(np.array([0.0, 1.0]), 1.0))
        assert kkt_residual(SimplexProblem(np.array([0.0, 1.0]), 1.0), sol.weights) <= 1e-12

    def test_vertex_is_not_stationary_for_uniform_costs(self):
        problem = SimplexProblem(np.array([1.0, 1.0, 1.0]), 1.0)
        assert kkt_residual(problem, np.array([1.0, 0.0, 0.0])) > 0.0

    def test_uniform_point_is_stationary_for_uniform_costs(self):
        problem = SimplexProblem(np.array([1.0, 1.0, 1.0]), 1.0)
        assert kkt_residual(problem, np.full(3, 1.0 / 3.0)) <= 1e-12

    def test_small_at_optimum_everywhere(self):
        rng = np.random.default_rng(29)
        for _ in range(500):
            problem = random_problem(rng)
            sol = solve_simplex(problem)
            assert kkt_residual(problem, sol.weights) <= 1e-8

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            kkt_residual(SimplexProblem(np.array([0.0, 1.0]), 1.0), np.array([1.0]))
