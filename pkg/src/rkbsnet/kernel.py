"""Weighted network kernel K(x, theta) = N(x, theta) * rho(theta) and feature matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .network import NetworkSpec, ParamsLike, ShapeError, as_params, forward


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class WeightFn:
    """Gaussian weight of the parameter norm, ``rho(theta) = exp(-alpha |theta|^2)``.

    Any positive continuous weight that makes ``N_k(x, .) rho(.)`` vanish at
    infinity would do; only the gaussian is provided.
    """

    kind: str = "gaussian_of_norm"
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind != "gaussian_of_norm":
            raise ValueError(f"unknown weight function kind {self.kind!r}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")


def rho(w: WeightFn, theta) -> float:
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise InputError("theta must be finite")
    return float(np.exp(-w.alpha * np.dot(theta.ravel(), theta.ravel())))


def kernel_eval(spec: NetworkSpec, w: WeightFn, x, theta: ParamsLike) -> np.ndarray:
    """K(x, theta): the forward pass scaled by the scalar rho(theta)."""
    params = as_params(spec, theta)
    return forward(spec, params, x) * rho(w, params.flatten())


@dataclass(frozen=True)
class Dataset:
    """Training pairs; ``X`` is (m, s) and ``Y`` is (m, t), one row per point."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.asarray(self.Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if X.shape[0] != Y.shape[0]:
            raise ShapeError("X and Y must have the same number of rows")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def m(self) -> int:
        return self.X.shape[0]

    def targets(self) -> np.ndarray:
        """Targets as the t x m matrix whose (k, j) entry is y_j^k."""
        return self.Y.T.copy()


def vec(Y) -> np.ndarray:
    """Flatten a t x m target matrix in the feature-matrix row order k*m + j."""
    return np.asarray(Y, dtype=float).ravel()


@dataclass(frozen=True)
class FeatureMatrix:
    """Entries ``K_k(x_j, theta_p)`` with row ``k*m + j`` and column ``p``."""

    entries: np.ndarray
    X: np.ndarray
    t: int
    candidates: object = None
    spec: NetworkSpec | None = None
    weight: WeightFn | None = None

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def shape(self):
        return self.entries.shape


def feature_matrix(spec: NetworkSpec, w: WeightFn, X, cands) -> FeatureMatrix:
    """Evaluate every K_k(x_j, theta_p) for the data inputs and a candidate set.

    ``cands`` is a CandidateSet or any (P, d) array of flat parameter vectors.
    """
    if isinstance(X, Dataset):
        X = X.X
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != spec.input_dim:
        raise ShapeError("data inputs do not match the network input dimension")
    if X.shape[0] < 1:
        raise InputError("at least one data point is required")
    if len(np.unique(X, axis=0)) != X.shape[0]:
        raise InputError("data inputs must be distinct")
    points = np.asarray(getattr(cands, "points", cands), dtype=float)
    if points.ndim != 2 or points.shape[0] < 1:
        raise InputError("at least one candidate is required")
    m, t = X.shape[0], spec.output_dim
    entries = np.empty((t * m, points.shape[0]))
    for p, theta in enumerate(points):
        col = forward(spec, theta, X) * rho(w, theta)  # (m, t)
        entries[:, p] = col.T.ravel()
    if not np.all(np.isfinite(entries)):
        raise InputError("feature matrix has non-finite entries")
    return FeatureMatrix(entries, X.copy(), t, cands, spec, w)


def rank_check(A, tol: float = 1e-10) -> tuple[int, bool]:
    """Numerical rank of the rows of ``A`` and a flag for linear dependence.

    Uses a column-pivoted QR of ``A.T``; a diagonal entry of R counts when it
    exceeds ``tol`` times the largest one. The flag is set when the rank is
    below the number of rows.
    """
    M = np.asarray(getattr(A, "entries", A), dtype=float)
    rows = M.shape[0]
    if M.size == 0:
        return 0, rows > 0
    R = scipy.linalg.qr(M.T, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        return 0, True
    rank = int(np.sum(diag > tol * diag[0]))
    return rank, rank < rows
