"""Shared dense linear-algebra primitives.

Everything here is a thin, contract-checked wrapper over LAPACK via
numpy/scipy: a deterministic thin SVD, the nuclear-norm proximal
operator (singular value thresholding), the orthogonal Procrustes
solver, and a Cholesky-backed SPD solve.  Determinism matters because
the ADMM driver must be bit-reproducible across runs, so the SVD sign
ambiguity is pinned down here once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import NumericalError

#: Singular values below RANK_RTOL * sigma_max count as zero.
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class ThinSVD:
    """Compact SVD ``M = left @ diag(singulars) @ right.T``.

    ``left`` and ``right`` have orthonormal columns; ``singulars`` is
    sorted descending.  Signs follow the convention that the
    largest-magnitude entry of each left singular vector is nonnegative.
    """

    left: np.ndarray
    singulars: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singulars) @ self.right.T

    @property
    def rank(self) -> int:
        if self.singulars.size == 0 or self.singulars[0] == 0.0:
            return 0
        return int(np.count_nonzero(self.singulars > RANK_RTOL * self.singulars[0]))


def thin_svd(m: np.ndarray) -> ThinSVD:
    """Thin SVD with a deterministic sign convention."""
    m = np.asarray(m, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix must be finite")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    anchor = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[anchor, np.arange(u.shape[1])])
    signs[signs == 0.0] = 1.0
    u = u * signs
    vt = vt * signs[:, None]
    return ThinSVD(left=u, singulars=s, right=vt.T)


def svt(m: np.ndarray, tau: float) -> np.ndarray:
    """Singular value thresholding: the proximal operator of
    ``tau * ||.||_*`` at ``m``.

    Shrinks every singular value by ``tau`` and clips at zero, leaving
    the singular vectors untouched.
    """
    if tau < 0.0 or not np.isfinite(tau):
        raise ValueError(f"threshold must be a nonnegative real, got {tau}")
    f = thin_svd(m)
    shrunk = np.maximum(f.singulars - tau, 0.0)
    return (f.left * shrunk) @ f.right.T


def procrustes(m: np.ndarray) -> np.ndarray:
    """Orthonormal-column maximizer of ``Tr(P.T @ m)``.

    For ``m`` of shape (d, r) with d >= r, returns ``U @ V.T`` from the
    thin SVD of ``m``.  When ``m`` is rank deficient the maximizer is
    not unique; the returned one inherits the thin-SVD sign convention.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < m.shape[1]:
        raise ValueError(f"need a tall matrix (rows >= cols), got shape {m.shape}")
    f = thin_svd(m)
    return f.left @ f.right.T


def spd_solve(a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``a @ x = rhs`` for symmetric positive definite ``a``.

    Uses a Cholesky factorization; raises :class:`NumericalError`
    carrying the failing pivot index when ``a`` is not positive
    definite.  Asymmetry beyond 1e-8 (relative to the largest entry) is
    rejected up front; smaller asymmetry is symmetrized away.
    """
    a = np.asarray(a, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if rhs.shape[0] != a.shape[0]:
        raise ValueError(f"rhs has {rhs.shape[0]} rows, matrix has {a.shape[0]}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if float(np.max(np.abs(a - a.T))) > 1e-8 * scale:
        raise ValueError("matrix is not symmetric within tolerance")

    sym = 0.5 * (a + a.T)
    chol, info = lapack.dpotrf(sym, lower=1, clean=0, overwrite_a=1)
    if info > 0:
        raise NumericalError(
            f"matrix is not positive definite (leading minor {info})", pivot=int(info)
        )
    if info < 0:
        raise ValueError(f"illegal value in argument {-info} of Cholesky factorization")

    rhs_2d = rhs if rhs.ndim == 2 else rhs[:, None]
    x, info = lapack.dpotrs(chol, rhs_2d, lower=1)
    if info != 0:
        raise NumericalError(f"triangular solve failed with status {info}")
    return x if rhs.ndim == 2 else x[:, 0]
