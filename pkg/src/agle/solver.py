"""ADMM driver for joint graph, low-rank, and sparse-projection learning.

The model couples four blocks over a sample matrix ``x`` (features in
rows, one column per sample):

* an orthonormal-column basis ``basis`` (d x m),
* a column-sparse projection ``projection`` (m x d) with exactly
  ``alpha`` non-zero columns, factored as a dense part times a 0/1
  feature-selection part,
* a self-representation coefficient matrix ``coeffs`` (n x n) pushed
  toward low rank through a nuclear-norm proxy ``aux`` with dual
  multiplier ``dual`` and growing penalty,
* a column-stochastic affinity graph re-solved per column by exact
  simplex QPs.

Each outer iteration runs the block updates in the fixed order coeffs,
aux, projection, basis, graph, multipliers, and stops when the primal
residual ``max|coeffs - aux|`` falls below ``epsilon`` or the iteration
cap is reached.  Everything is deterministic given the inputs; the SVD
sign convention in :mod:`agle.kernels` removes the only platform
ambiguity.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist

from . import graph as graph_mod
from .errors import NumericalError
from .graph import AffinityGraph
from .kernels import procrustes, spd_solve, svt, thin_svd

logger = logging.getLogger(__name__)

ORTHONORMALITY_TOL = 1e-10


@dataclass(frozen=True)
class Hyperparams:
    """Regularizers and ADMM controls.

    ``lambda1`` weighs the projection's Frobenius penalty, ``lambda2``
    the nuclear norm of the coefficients, ``lambda3`` the graph's
    quadratic spread.  ``dim`` is the embedding dimension, ``alpha`` the
    number of original features the projection may keep, ``neighbors``
    the candidate-neighbor count of the frozen kNN mask.
    """

    lambda1: float
    lambda2: float
    lambda3: float
    dim: int
    alpha: int
    neighbors: int
    mu0: float = 0.1
    rho: float = 1.1
    mu_max: float = 1e8
    epsilon: float = 1e-6
    max_iter: int = 60

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda1 and lambda2 must be nonnegative")
        if self.lambda3 <= 0:
            raise ValueError("lambda3 must be positive")
        if self.dim < 1:
            raise ValueError("embedding dimension must be at least 1")
        if self.alpha < self.dim:
            raise ValueError(f"m <= alpha violated: alpha={self.alpha} < m={self.dim}")
        if self.neighbors < 1:
            raise ValueError("neighbor size must be at least 1")
        if self.mu0 <= 0 or self.rho <= 1 or self.mu_max < self.mu0:
            raise ValueError("penalty schedule requires mu0 > 0, rho > 1, mu_max >= mu0")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")

    def validate_for_data(self, d: int, n: int) -> None:
        if self.dim >= d:
            raise ValueError(f"m < d violated: m={self.dim}, d={d}")
        if self.alpha > d:
            raise ValueError(f"alpha <= d violated: alpha={self.alpha}, d={d}")
        if self.neighbors >= n:
            raise ValueError(f"k < n violated: k={self.neighbors}, n={n}")


@dataclass(frozen=True)
class SparseProjection:
    """Projection with exactly ``len(selected)`` non-zero columns.

    Factored as a dense (m x alpha) part ``v`` times an implicit 0/1
    selection of the feature indices in ``selected``; products never
    touch unselected feature rows.
    """

    v: np.ndarray
    selected: np.ndarray
    d: int

    def __post_init__(self):
        sel = np.asarray(self.selected, dtype=np.intp)
        if sel.ndim != 1 or self.v.ndim != 2 or self.v.shape[1] != sel.size:
            raise ValueError("dense factor must have one column per selected feature")
        if sel.size and (np.unique(sel).size != sel.size or sel.min() < 0 or sel.max() >= self.d):
            raise ValueError("selected indices must be distinct and within [0, d)")
        object.__setattr__(self, "selected", sel)

    @property
    def alpha(self) -> int:
        return self.selected.size

    @property
    def m(self) -> int:
        return self.v.shape[0]

    def matrix(self) -> np.ndarray:
        """Materializes the m x d projection."""
        q = np.zeros((self.m, self.d))
        q[:, self.selected] = self.v
        return q

    def transform(self, x: np.ndarray) -> np.ndarray:
        """Project ``x`` (d x anything) reading only selected rows."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.d:
            raise ValueError(f"data has {x.shape[0]} feature rows, projection expects {self.d}")
        return self.v @ x[self.selected, :]


def transform(projection: SparseProjection, x: np.ndarray) -> np.ndarray:
    """Free-function alias of :meth:`SparseProjection.transform`."""
    return projection.transform(x)


@dataclass
class SolverState:
    """All ADMM iterates."""

    basis: np.ndarray
    projection: SparseProjection
    coeffs: np.ndarray
    aux: np.ndarray
    dual: np.ndarray
    penalty: float
    graph: AffinityGraph
    iteration: int = 0


@dataclass(frozen=True)
class IterationLog:
    """Per-iteration diagnostics emitted by :func:`fit`."""

    iteration: int
    objective: float
    residual: float
    penalty: float
    support_sizes: np.ndarray = field(repr=False, default=None)


def _deterministic_signs(u: np.ndarray) -> np.ndarray:
    anchor = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[anchor, np.arange(u.shape[1])])
    signs[signs == 0.0] = 1.0
    return u * signs


def initialize(x: np.ndarray, params: Hyperparams) -> SolverState:
    """Starting point: PCA basis, its transpose as projection, zero
    coefficients, uniform kNN graph."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("data must be a 2-D matrix (features x samples)")
    if not np.all(np.isfinite(x)):
        raise ValueError("data must be finite")
    d, n = x.shape
    params.validate_for_data(d, n)

    centered = x - x.mean(axis=1, keepdims=True)
    cov = (centered @ centered.T) / max(n - 1, 1)
    _, vecs = np.linalg.eigh(cov)
    basis = _deterministic_signs(vecs[:, ::-1][:, : params.dim])

    mask = graph_mod.knn_mask(x, params.neighbors)
    return SolverState(
        basis=basis,
        projection=SparseProjection(v=basis.T.copy(), selected=np.arange(d), d=d),
        coeffs=np.zeros((n, n)),
        aux=np.zeros((n, n)),
        dual=np.zeros((n, n)),
        penalty=params.mu0,
        graph=graph_mod.init_affinity(mask, params.neighbors),
    )


def update_coeffs(state: SolverState, x: np.ndarray, params: Hyperparams) -> np.ndarray:
    """Exact minimizer of the coefficient subproblem (an SPD solve)."""
    n = x.shape[1]
    qx = state.projection.transform(x)
    px = state.basis.T @ x
    system = 2.0 * (qx.T @ qx)
    system[np.diag_indices(n)] += state.penalty
    rhs = 2.0 * qx.T @ (px @ state.graph.weights) + state.penalty * state.aux - state.dual
    return spd_solve(system, rhs)


def update_aux(state: SolverState, params: Hyperparams) -> np.ndarray:
    """Nuclear-norm proximal step on the coefficients plus scaled dual."""
    return svt(state.coeffs + state.dual / state.penalty, params.lambda2 / state.penalty)


def select_features(f: np.ndarray, g: np.ndarray, alpha: int) -> SparseProjection:
    """Greedy feature selection plus exact dense refit.

    Features are ranked by the diagonal of ``g^-1 (f^T f)`` (the greedy
    score of the trace objective the selection maximizes) with ties
    going to the smaller index; the dense factor is the exact minimizer
    of the fit residual restricted to the selected principal submatrix
    of ``g``.
    """
    d = g.shape[0]
    if alpha > d:
        raise ValueError(f"cannot select {alpha} of {d} features")
    scores = np.einsum("ij,ij->i", spd_solve(g, f.T), f.T)
    order = np.argsort(-scores, kind="stable")
    selected = np.sort(order[:alpha])
    v = spd_solve(g[np.ix_(selected, selected)], f[:, selected].T).T
    return SparseProjection(v=v, selected=selected, d=d)


def update_projection(state: SolverState, x: np.ndarray, params: Hyperparams) -> SparseProjection:
    """Column-sparse projection update via :func:`select_features`.

    The alignment matrix couples the basis, data, graph, and
    coefficients; the Gram matrix gets the Frobenius penalty on its
    diagonal (or a vanishing ridge when that penalty is zero, so a
    merely rank-deficient Gram does not abort the solve)."""
    d = x.shape[0]
    sz = state.graph.weights @ state.coeffs.T
    f = (state.basis.T @ x) @ sz @ x.T
    xz = x @ state.coeffs
    g = xz @ xz.T
    ridge = params.lambda1
    if ridge == 0.0:
        ridge = 1e-10 * np.trace(g) / d
        logger.warning("lambda1 is zero; adding ridge %.3e to keep the Gram solvable", ridge)
    g[np.diag_indices(d)] += ridge
    return select_features(f, g, params.alpha)


def update_basis(state: SolverState, x: np.ndarray) -> np.ndarray:
    """Orthogonal Procrustes step: maximizes the alignment trace."""
    qx = state.projection.transform(x)
    target = x @ (state.graph.weights @ state.coeffs.T) @ qx.T
    return procrustes(target)


def update_graph(state: SolverState, x: np.ndarray, params: Hyperparams) -> AffinityGraph:
    """Re-solve neighbor weights against the current reconstruction."""
    recon = state.basis @ state.projection.transform(x @ state.coeffs)
    cost = cdist(x.T, recon.T, "sqeuclidean")
    return graph_mod.update_affinity(cost, state.graph.candidate_mask, params.lambda3)


def update_multipliers(state: SolverState, params: Hyperparams) -> tuple[np.ndarray, float]:
    """Dual ascent on the coeffs-aux split, then penalty growth."""
    dual = state.dual + state.penalty * (state.coeffs - state.aux)
    penalty = min(params.rho * state.penalty, params.mu_max)
    return dual, penalty


def objective(state: SolverState, x: np.ndarray, params: Hyperparams) -> float:
    """Model objective at the current iterates (nuclear norm taken on
    the coefficients, not the proxy)."""
    recon = state.basis @ state.projection.transform(x @ state.coeffs)
    cost = cdist(x.T, recon.T, "sqeuclidean")
    fidelity = float(np.sum(cost * state.graph.weights))
    nuclear = float(np.sum(thin_svd(state.coeffs).singulars))
    return (
        fidelity
        + params.lambda1 * float(np.sum(state.projection.v**2))
        + params.lambda2 * nuclear
        + params.lambda3 * float(np.sum(state.graph.weights**2))
    )


def fit_state(
    x: np.ndarray,
    params: Hyperparams,
    sink: Callable[[IterationLog], None] | None = None,
) -> tuple[SolverState, list[IterationLog]]:
    """Run the full ADMM loop, returning the final state and the log.

    ``sink`` receives each :class:`IterationLog` as soon as it exists
    (the CLI streams them to CSV).  Numerical failures abort with the
    iteration index attached.
    """
    x = np.asarray(x, dtype=np.float64)
    state = initialize(x, params)
    history: list[IterationLog] = []
    for it in range(1, params.max_iter + 1):
        try:
            state.coeffs = update_coeffs(state, x, params)
            state.aux = update_aux(state, params)
            state.projection = update_projection(state, x, params)
            state.basis = update_basis(state, x)
            state.graph = update_graph(state, x, params)
        except NumericalError as err:
            raise NumericalError(f"iteration {it}: {err}", pivot=err.pivot) from err
        residual = float(np.max(np.abs(state.coeffs - state.aux)))
        # The graph constructor re-checks column sums each iteration, so the
        # identity column-degree simplification cannot silently break.
        state.dual, state.penalty = update_multipliers(state, params)
        state.iteration = it
        entry = IterationLog(
            iteration=it,
            objective=objective(state, x, params),
            residual=residual,
            penalty=state.penalty,
            support_sizes=state.graph.support_sizes(),
        )
        history.append(entry)
        if sink is not None:
            sink(entry)
        if residual <= params.epsilon:
            break
    return state, history


def fit(
    x: np.ndarray,
    params: Hyperparams,
    sink: Callable[[IterationLog], None] | None = None,
) -> tuple[SparseProjection, list[IterationLog]]:
    """Convenience wrapper returning only the learned projection."""
    state, history = fit_state(x, params, sink)
    return state.projection, history
