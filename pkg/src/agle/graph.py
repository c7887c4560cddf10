"""Neighborhood machinery for the learned affinity graph.

A graph over n samples is a nonnegative n x n weight matrix whose
columns sum to one (column j holds the neighbor weights of sample j),
restricted to a fixed candidate mask: the k nearest neighbors of each
sample, computed once from the raw data and frozen thereafter.  Within
the mask, weights are re-solved each outer iteration by independent
per-column simplex QPs, so the realized support of a column can be any
nonempty subset of its candidates - neighbor counts adapt to the data
instead of being pinned at k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .simplex import SimplexProblem, solve_simplex

COLUMN_SUM_TOL = 1e-10


@dataclass(frozen=True)
class AffinityGraph:
    """Column-stochastic neighbor weights over a frozen candidate mask."""

    weights: np.ndarray
    candidate_mask: np.ndarray
    neighbor_size: int

    def __post_init__(self):
        w, mask = self.weights, self.candidate_mask
        if w.shape != mask.shape or w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights and candidate_mask must be square and same shape")
        if np.min(w) < 0.0:
            raise ValueError("weights must be nonnegative")
        if np.any(w[~mask] != 0.0):
            raise ValueError("weights outside the candidate mask must be zero")
        col_err = np.max(np.abs(w.sum(axis=0) - 1.0))
        if col_err > COLUMN_SUM_TOL:
            raise ValueError(f"columns must sum to 1, worst error {col_err:.3e}")

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def support_sizes(self) -> np.ndarray:
        """Number of strictly positive weights in each column."""
        return np.count_nonzero(self.weights > 0.0, axis=0)


@dataclass(frozen=True)
class DegreePair:
    """Row sums (d1) and column sums (d2) of an affinity matrix.

    For any valid column-stochastic graph d2 is identically one, which
    is why downstream algebra treats the column-degree matrix as the
    identity.
    """

    d1: np.ndarray
    d2: np.ndarray


def knn_mask(x: np.ndarray, k: int) -> np.ndarray:
    """Boolean n x n candidate mask: column j marks the k nearest
    neighbors of sample j (Euclidean, self excluded, ties to the
    smaller index)."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[1]
    if not 1 <= k < n:
        raise ValueError(f"neighbor size must satisfy 1 <= k < n, got k={k}, n={n}")
    dist = cdist(x.T, x.T, "sqeuclidean")
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=0, kind="stable")
    mask = np.zeros((n, n), dtype=bool)
    mask[order[:k, :], np.arange(n)] = True
    return mask


def init_affinity(mask: np.ndarray, k: int) -> AffinityGraph:
    """Uniform 1/k weights on the candidate mask.

    The mask must be a genuine neighbor mask: no sample is its own
    candidate, and every column offers exactly k candidates.
    """
    mask = np.asarray(mask, dtype=bool)
    if np.any(np.diag(mask)):
        raise ValueError("candidate mask must exclude the diagonal")
    counts = mask.sum(axis=0)
    if np.any(counts != k):
        bad = int(np.flatnonzero(counts != k)[0])
        raise ValueError(
            f"column {bad} has {int(counts[bad])} candidates, expected exactly {k}"
        )
    weights = np.where(mask, 1.0 / k, 0.0)
    return AffinityGraph(weights=weights, candidate_mask=mask, neighbor_size=k)


def _solve_columns_lockstep(costs: np.ndarray, gamma: float) -> np.ndarray:
    """Simplex-QP minimizers for every column of a (k, n) cost block.

    Runs the threshold recursion of :func:`agle.simplex.solve_simplex`
    on all columns in lockstep; per column the arithmetic is identical
    to the scalar solver, so the outputs match it bit for bit.
    """
    k, n = costs.shape
    two_gamma = 2.0 * gamma
    costs_sorted = np.sort(costs, axis=0)
    prefix = np.vstack([np.zeros(n), np.cumsum(costs_sorted, axis=0)])
    active = np.full(n, k)
    thresholds = (prefix[k] + two_gamma) / k
    for _ in range(k):
        counts = np.count_nonzero(costs_sorted < thresholds, axis=0)
        if np.array_equal(counts, active):
            break
        active = counts
        thresholds = (prefix[active, np.arange(n)] + two_gamma) / active
    return np.where(
        costs < thresholds, (thresholds - costs) / two_gamma, 0.0
    )


def update_affinity(cost: np.ndarray, mask: np.ndarray, lambda3: float) -> AffinityGraph:
    """Re-solve every column's weights given per-pair costs.

    Column j minimizes ``sum_i cost[i, j] * s_ij + lambda3 * ||s_j||^2``
    over the simplex, restricted to the rows flagged by ``mask``.
    Columns are mutually independent; when every column offers the same
    number of candidates (the frozen kNN case) they are solved in one
    vectorized pass, otherwise one by one.
    """
    cost = np.asarray(cost, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if cost.shape != mask.shape:
        raise ValueError("cost and mask shapes differ")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    if lambda3 <= 0.0:
        raise ValueError(f"lambda3 must be positive, got {lambda3}")

    n = cost.shape[1]
    counts = mask.sum(axis=0)
    if np.min(counts) == 0:
        bad = int(np.flatnonzero(counts == 0)[0])
        raise ValueError(f"column {bad} has no candidate neighbors")

    weights = np.zeros_like(cost)
    k = int(np.max(counts))
    if np.min(counts) == k:
        candidate_rows = np.nonzero(mask.T)[1].reshape(n, k).T
        weights[candidate_rows, np.arange(n)] = _solve_columns_lockstep(
            cost[candidate_rows, np.arange(n)], lambda3
        )
    else:
        for j in range(n):
            candidates = np.flatnonzero(mask[:, j])
            sol = solve_simplex(SimplexProblem(cost[candidates, j], lambda3))
            weights[candidates, j] = sol.weights
    return AffinityGraph(weights=weights, candidate_mask=mask, neighbor_size=k)


def degrees(graph: AffinityGraph) -> DegreePair:
    return DegreePair(d1=graph.weights.sum(axis=1), d2=graph.weights.sum(axis=0))
