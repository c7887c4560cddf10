"""Exact solver for the simplex-constrained quadratic program

    minimize    sum_i a_i * s_i + gamma * ||s||_2^2
    subject to  s >= 0,  sum_i s_i = 1.

The minimizer has the closed form ``s_i = max(c - a_i, 0) / (2 * gamma)``
for a threshold ``c`` that is found by an active-set peeling recursion:
start with every index active, compute the candidate threshold
``c = (sum of active costs + 2 * gamma) / k``, drop indices whose cost is
not below ``c``, and repeat until the active set stops changing.  The
candidate threshold sequence is nonincreasing, so the recursion
terminates after at most ``n`` rounds, and the fixed point satisfies the
KKT conditions exactly (strong convexity makes it the unique global
minimizer).

Costs are pre-sorted once; each round is then a binary search plus a
prefix-sum lookup, for O(n log n) total.

``oracle_solve`` is a brute-force reference used only by tests: it
enumerates every support set and keeps the KKT-feasible candidate with
the lowest objective.  It trusts no part of the fast path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_MAX_ORACLE_SIZE = 20


@dataclass(frozen=True)
class SimplexProblem:
    """Costs and curvature of one simplex-constrained subproblem."""

    costs: np.ndarray
    gamma: float

    def __post_init__(self):
        costs = np.atleast_1d(np.asarray(self.costs, dtype=np.float64))
        if costs.ndim != 1 or costs.size == 0:
            raise ValueError("costs must be a non-empty 1-D vector")
        if not np.all(np.isfinite(costs)):
            raise ValueError("costs must be finite")
        if not np.isfinite(self.gamma) or self.gamma <= 0.0:
            raise ValueError(f"gamma must be a positive real, got {self.gamma}")
        object.__setattr__(self, "costs", costs)

    @property
    def size(self) -> int:
        return self.costs.size


@dataclass(frozen=True)
class SimplexSolution:
    """Minimizer plus the recursion diagnostics that produced it.

    ``thresholds`` records the candidate threshold of every round,
    including the converged value; it is nonincreasing.
    """

    weights: np.ndarray
    support: np.ndarray
    threshold: float
    iterations: int
    thresholds: np.ndarray = field(repr=False, default=None)

    def objective(self, problem: SimplexProblem) -> float:
        s = self.weights
        return float(problem.costs @ s + problem.gamma * (s @ s))


def solve_simplex(problem: SimplexProblem) -> SimplexSolution:
    """Return the unique global minimizer of the simplex QP.

    Support membership uses the strict comparison ``a_i < c``; an index
    whose cost ties the threshold would receive zero weight anyway.
    Convergence is detected by support-size equality, which is an exact
    integer comparison.
    """
    a = problem.costs
    n = a.size
    two_gamma = 2.0 * problem.gamma

    a_sorted = np.sort(a, kind="stable")
    prefix = np.concatenate(([0.0], np.cumsum(a_sorted)))

    k = n
    c = (prefix[n] + two_gamma) / n
    thresholds = [c]
    rounds = 0
    while True:
        k_new = int(np.searchsorted(a_sorted, c, side="left"))
        if k_new == k:
            break
        k = k_new
        c = (prefix[k] + two_gamma) / k
        thresholds.append(c)
        rounds += 1

    members = a < c
    weights = np.zeros(n)
    weights[members] = (c - a[members]) / two_gamma
    return SimplexSolution(
        weights=weights,
        support=np.flatnonzero(members),
        threshold=float(c),
        iterations=rounds,
        thresholds=np.asarray(thresholds),
    )


def kkt_residual(problem: SimplexProblem, s: np.ndarray) -> float:
    """Worst violation of the KKT system at ``s``.

    Checks nonnegativity, the sum-to-one constraint, dual feasibility,
    and complementary slackness, with the stationarity multiplier
    ``nu = -(sum of supported costs + 2 * gamma) / k`` recovered from the
    positive entries of ``s``.  Returns 0 (to rounding) exactly at the
    optimum.
    """
    a = problem.costs
    s = np.asarray(s, dtype=np.float64)
    if s.shape != a.shape:
        raise ValueError(f"candidate has shape {s.shape}, expected {a.shape}")

    violations = [max(0.0, -float(np.min(s))), abs(float(np.sum(s)) - 1.0)]
    supported = s > 0.0
    k = int(np.count_nonzero(supported))
    if k > 0:
        nu = -(float(a[supported].sum()) + 2.0 * problem.gamma) / k
        lam = a + 2.0 * problem.gamma * s + nu
        violations.append(float(np.max(np.abs(lam * s))))
        violations.append(max(0.0, -float(np.min(lam))))
    return max(violations)


def oracle_solve(problem: SimplexProblem) -> SimplexSolution:
    """Brute-force reference solver: enumerate every support set.

    On each candidate support the equality-constrained quadratic has a
    closed form; a candidate is kept only if its weights are nonnegative
    and every excluded index has a nonnegative KKT multiplier.  Among
    feasible candidates the lowest objective wins.  The enumeration is
    batched (chunks of masks evaluated with array ops) but remains
    exhaustive; exponential in n, so capped at n <= 20.
    """
    a = problem.costs
    n = a.size
    if n > _MAX_ORACLE_SIZE:
        raise ValueError(f"oracle enumeration supports n <= {_MAX_ORACLE_SIZE}, got {n}")
    two_gamma = 2.0 * problem.gamma
    feas_tol = 1e-12
    bit_values = 1 << np.arange(n)

    best_obj = np.inf
    best = None
    chunk = 1 << min(n, 14)
    for start in range(1, 1 << n, chunk):
        masks = np.arange(start, min(start + chunk, 1 << n))
        members = (masks[:, None] & bit_values[None, :]) != 0
        k = members.sum(axis=1)
        c = (members @ a + two_gamma) / k
        s = np.where(members, (c[:, None] - a[None, :]) / two_gamma, 0.0)
        feasible = np.min(s, axis=1) >= -feas_tol
        excluded_gap = np.where(members, np.inf, a[None, :] - c[:, None])
        feasible &= np.min(excluded_gap, axis=1) >= -feas_tol
        if not np.any(feasible):
            continue
        s = np.maximum(s, 0.0)
        obj = s @ a + problem.gamma * np.sum(s * s, axis=1)
        obj[~feasible] = np.inf
        winner = int(np.argmin(obj))
        if obj[winner] < best_obj:
            best_obj = float(obj[winner])
            best = (s[winner], float(c[winner]))

    s, c = best
    return SimplexSolution(
        weights=s,
        support=np.flatnonzero(s > 0.0),
        threshold=c,
        iterations=0,
        thresholds=np.asarray([c]),
    )
