"""Evaluation protocol: PCA energy reduction, per-sample normalization,
seeded class-balanced splits, 1-NN scoring, and repeated grid sweeps.

The evaluation convention throughout: reduce dimension with a PCA basis
fit on the training columns only, normalize every sample to unit length,
learn the projection on training data, embed both splits, normalize
again, and classify each test sample by its nearest training neighbor.
Accuracies are aggregated as mean and standard deviation over seeded
repeats, one summary row per hyperparameter grid point.
"""

from __future__ import annotations

import itertools
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from . import data_io, solver

logger = logging.getLogger(__name__)

METHODS = ("agle", "pca", "raw")


@dataclass(frozen=True)
class PCABasis:
    """Mean and principal directions fit on one set of columns."""

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray = field(repr=False, default=None)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.components.T @ (np.asarray(x, dtype=np.float64) - self.mean[:, None])


def pca_reduce(
    x: np.ndarray, energy: float | None = 0.98, dim: int | None = None
) -> tuple[PCABasis, np.ndarray]:
    """Center and project onto the leading principal directions.

    Keeps the smallest number of directions whose eigenvalue mass
    reaches ``energy``, or exactly ``dim`` directions when given.
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("data must be finite")
    d, n = x.shape
    mean = x.mean(axis=1)
    centered = x - mean[:, None]
    cov = (centered @ centered.T) / max(n - 1, 1)
    vals, vecs = np.linalg.eigh(cov)
    vals, vecs = np.maximum(vals[::-1], 0.0), vecs[:, ::-1]

    if dim is not None:
        if not 1 <= dim <= d:
            raise ValueError(f"explicit dimension must lie in [1, {d}], got {dim}")
        keep = dim
    else:
        if energy is None or not 0.0 < energy <= 1.0:
            raise ValueError(f"energy must lie in (0, 1], got {energy}")
        total = float(vals.sum())
        if total == 0.0:
            keep = 1
        else:
            fractions = np.cumsum(vals) / total
            keep = int(np.argmax(fractions >= energy - 1e-12)) + 1

    signs = np.sign(vecs[np.argmax(np.abs(vecs[:, :keep]), axis=0), np.arange(keep)])
    signs[signs == 0.0] = 1.0
    basis = PCABasis(mean=mean, components=vecs[:, :keep] * signs, eigenvalues=vals[:keep])
    return basis, basis.apply(x)


def normalize_columns(x: np.ndarray) -> np.ndarray:
    """Scale every column to unit Euclidean length; zero columns stay
    zero (with a warning, since they carry no direction)."""
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=0)
    zero = norms == 0.0
    if np.any(zero):
        logger.warning("leaving %d zero column(s) unnormalized", int(zero.sum()))
        norms = norms.copy()
        norms[zero] = 1.0
    return x / norms


def split(
    labels: np.ndarray, trainers_per_class: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Class-balanced train/test split: exactly ``trainers_per_class``
    seeded draws per class, remainder to test."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if members.size <= trainers_per_class:
            raise ValueError(
                f"class {cls} has {members.size} samples, needs more than "
                f"{trainers_per_class} to leave test data"
            )
        perm = rng.permutation(members)
        train.append(perm[:trainers_per_class])
        test.append(perm[trainers_per_class:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def knn1_predict(
    train_emb: np.ndarray, train_labels: np.ndarray, test_emb: np.ndarray
) -> np.ndarray:
    """Label each test column by its nearest training column.

    Both sides are re-normalized to unit length first; distance ties go
    to the smaller training index.
    """
    if train_emb.shape[1] == 0:
        raise ValueError("training set is empty")
    if train_emb.shape[0] != test_emb.shape[0]:
        raise ValueError(
            f"embedding dimensions differ: train {train_emb.shape[0]}, test {test_emb.shape[0]}"
        )
    dist = cdist(
        normalize_columns(test_emb).T, normalize_columns(train_emb).T, "sqeuclidean"
    )
    return np.asarray(train_labels)[np.argmin(dist, axis=1)]


def knn1_accuracy(
    train_emb: np.ndarray,
    train_labels: np.ndarray,
    test_emb: np.ndarray,
    test_labels: np.ndarray,
) -> float:
    predicted = knn1_predict(train_emb, train_labels, test_emb)
    return float(np.mean(predicted == np.asarray(test_labels)))


def ninety_percent_alpha(dim: int, reduced_d: int) -> int:
    """Default feature budget: 90% of the available features, never
    below the embedding dimension."""
    return min(max(dim, int(np.floor(0.9 * reduced_d))), reduced_d)


@dataclass(frozen=True)
class ExperimentPlan:
    """One evaluation campaign: dataset, split policy, grid, repeats."""

    dataset: str | Path | None
    trainers_per_class: int
    reduced_dim: int
    repeats: int = 10
    pca_energy: float | None = 0.98
    pca_dim: int | None = None
    lambda1_grid: tuple[float, ...] = (1e-4,)
    lambda2_grid: tuple[float, ...] = (1e-4,)
    lambda3_grid: tuple[float, ...] = (10.0,)
    alpha: int | None = None
    neighbors: int | None = None
    seed: int = 0
    method: str = "agle"

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if self.pca_dim is None and (self.pca_energy is None or not 0 < self.pca_energy <= 1):
            raise ValueError(f"pca energy must lie in (0, 1], got {self.pca_energy}")
        if not (self.lambda1_grid and self.lambda2_grid and self.lambda3_grid):
            raise ValueError("hyperparameter grids must be nonempty")
        if self.method not in METHODS:
            raise ValueError(f"unknown method '{self.method}' (want one of {METHODS})")

    def grid(self) -> list[tuple[float, float, float]]:
        return list(itertools.product(self.lambda1_grid, self.lambda2_grid, self.lambda3_grid))


@dataclass(frozen=True)
class TrialResult:
    accuracy: float
    per_class_accuracy: np.ndarray
    fit_history: list[solver.IterationLog]
    chosen_features: np.ndarray | None
    timings: dict[str, float]


@dataclass(frozen=True)
class CellSummary:
    """Aggregate over repeats of one grid point."""

    lambda1: float
    lambda2: float
    lambda3: float
    dim: int
    alpha: int
    mean: float
    std: float
    repeats: int
    failures: int
    accuracies: tuple[float, ...]

    @property
    def incomplete(self) -> bool:
        return self.failures > 0

    def table_cell(self) -> str:
        """Accuracy as percent, ``mean±std`` with two decimals."""
        return f"{100 * self.mean:.2f}±{100 * self.std:.2f}"


@dataclass(frozen=True)
class PlanSummary:
    plan: ExperimentPlan
    cells: list[CellSummary]
    trials: dict[tuple[int, int], TrialResult]


def run_trial(
    x: np.ndarray,
    labels: np.ndarray,
    plan: ExperimentPlan,
    lambdas: tuple[float, float, float],
    repeat: int,
) -> TrialResult:
    """One split-reduce-fit-score pass.  The PCA basis and all learned
    quantities see training columns only."""
    timings: dict[str, float] = {}
    tic = time.perf_counter()
    train_idx, test_idx = split(labels, plan.trainers_per_class, plan.seed + repeat)
    x_train, x_test = x[:, train_idx], x[:, test_idx]
    y_train, y_test = labels[train_idx], labels[test_idx]
    timings["split"] = time.perf_counter() - tic

    tic = time.perf_counter()
    if plan.method == "raw":
        emb_train, emb_test = x_train, x_test
        history: list[solver.IterationLog] = []
        chosen = None
        timings["reduce"] = time.perf_counter() - tic
    elif plan.method == "pca":
        basis, emb_train = pca_reduce(x_train, dim=min(plan.reduced_dim, x.shape[0]))
        emb_test = basis.apply(x_test)
        history, chosen = [], None
        timings["reduce"] = time.perf_counter() - tic
    else:
        basis, red_train = pca_reduce(x_train, energy=plan.pca_energy, dim=plan.pca_dim)
        red_test = basis.apply(x_test)
        red_train = normalize_columns(red_train)
        red_test = normalize_columns(red_test)
        timings["reduce"] = time.perf_counter() - tic

        tic = time.perf_counter()
        reduced_d = red_train.shape[0]
        alpha = plan.alpha if plan.alpha is not None else ninety_percent_alpha(
            plan.reduced_dim, reduced_d
        )
        params = solver.Hyperparams(
            lambda1=lambdas[0],
            lambda2=lambdas[1],
            lambda3=lambdas[2],
            dim=plan.reduced_dim,
            alpha=alpha,
            neighbors=plan.neighbors if plan.neighbors is not None else plan.trainers_per_class,
        )
        projection, history = solver.fit(red_train, params)
        chosen = projection.selected
        emb_train = projection.transform(red_train)
        emb_test = projection.transform(red_test)
        timings["fit"] = time.perf_counter() - tic

    tic = time.perf_counter()
    predicted = knn1_predict(emb_train, y_train, emb_test)
    accuracy = float(np.mean(predicted == y_test))
    classes = np.unique(labels)
    per_class = np.array(
        [float(np.mean(predicted[y_test == cls] == cls)) for cls in classes]
    )
    timings["score"] = time.perf_counter() - tic

    return TrialResult(
        accuracy=accuracy,
        per_class_accuracy=per_class,
        fit_history=history,
        chosen_features=chosen,
        timings=timings,
    )


def run_plan(
    plan: ExperimentPlan,
    data: tuple[np.ndarray, np.ndarray] | None = None,
    jobs: int = 1,
) -> PlanSummary:
    """Execute every (grid point x repeat) trial and aggregate.

    Individual trial failures are recorded and skipped; the summary
    flags the affected cells instead of aborting the campaign.
    """
    if data is None:
        if plan.dataset is None:
            raise ValueError("plan has no dataset path and no data was supplied")
        x, labels = data_io.load_dataset(plan.dataset)
    else:
        x, labels = data
        labels = np.asarray(labels)

    grid = plan.grid()
    tasks = [(ci, rep) for ci in range(len(grid)) for rep in range(plan.repeats)]

    def execute(task: tuple[int, int]):
        ci, rep = task
        try:
            return task, run_trial(x, labels, plan, grid[ci], rep)
        except Exception as err:  # noqa: BLE001 - recorded per-trial, plan continues
            logger.warning("trial %s failed: %s", task, err)
            return task, None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(execute, tasks))
    else:
        outcomes = [execute(task) for task in tasks]

    trials = {task: result for task, result in outcomes if result is not None}
    cells = []
    for ci, (l1, l2, l3) in enumerate(grid):
        accs = tuple(
            trials[(ci, rep)].accuracy for rep in range(plan.repeats) if (ci, rep) in trials
        )
        failures = plan.repeats - len(accs)
        alpha = plan.alpha if plan.alpha is not None else -1
        done = [trials[(ci, rep)] for rep in range(plan.repeats) if (ci, rep) in trials]
        if alpha == -1 and any(t.chosen_features is not None for t in done):
            alpha = next(t.chosen_features.size for t in done if t.chosen_features is not None)
        cells.append(
            CellSummary(
                lambda1=l1,
                lambda2=l2,
                lambda3=l3,
                dim=plan.reduced_dim,
                alpha=alpha,
                mean=float(np.mean(accs)) if accs else float("nan"),
                std=float(np.std(accs)) if accs else float("nan"),
                repeats=len(accs),
                failures=failures,
                accuracies=accs,
            )
        )
    return PlanSummary(plan=plan, cells=cells, trials=trials)
