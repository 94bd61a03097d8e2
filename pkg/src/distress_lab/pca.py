"""Correlation-matrix PCA, component retention, varimax rotation and score coefficients."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NoConvergence, SingularCorrelation, TooFewRows
from .finstat import Dataset
from .numcore import correlation_matrix, sym_eigen

VARIMAX_TOL = 1e-10
VARIMAX_MAX_SWEEPS = 200


@dataclass(frozen=True)
class PcaModel:
    feature_names: tuple[str, ...]
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    loadings: np.ndarray  # features x components
    explained_share: np.ndarray
    cumulative_share: np.ndarray
    correlation: np.ndarray
    n_obs: int


@dataclass(frozen=True)
class RotatedModel:
    feature_names: tuple[str, ...]
    unrotated_loadings: np.ndarray
    rotated_loadings: np.ndarray
    rotation: np.ndarray
    criterion_trace: tuple[float, ...] = ()
    sweeps: int = 0
    score_coefficients: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.rotated_loadings.shape[1]


@dataclass(frozen=True)
class KaiserUnitEigenvalue:
    """Keep components whose eigenvalue exceeds 1."""


@dataclass(frozen=True)
class CumulativeShare:
    """Keep the fewest components whose cumulative explained share reaches ``threshold``."""

    threshold: float


def fit_pca_matrix(X, feature_names: Sequence[str]) -> PcaModel:
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 3:
        raise TooFewRows(f"PCA needs at least 3 rows, got {X.shape[0]}")
    corr = correlation_matrix(X)
    eig = sym_eigen(corr)
    vals = eig.eigenvalues
    loadings = eig.eigenvectors * np.sqrt(np.clip(vals, 0.0, None))
    p = corr.shape[0]
    share = vals / p
    return PcaModel(
        feature_names=tuple(feature_names),
        eigenvalues=vals,
        eigenvectors=eig.eigenvectors,
        loadings=loadings,
        explained_share=share,
        cumulative_share=np.cumsum(share),
        correlation=corr,
        n_obs=X.shape[0],
    )


def fit_pca(ds: Dataset, features: Sequence[str] | None = None) -> PcaModel:
    features = list(ds.feature_names if features is None else features)
    ds.check_features(features)
    return fit_pca_matrix(ds.matrix(features), features)


def select_components(model: PcaModel, rule=KaiserUnitEigenvalue()) -> int:
    if isinstance(rule, KaiserUnitEigenvalue):
        k = int(np.sum(model.eigenvalues > 1.0))
    elif isinstance(rule, CumulativeShare):
        hits = np.flatnonzero(model.cumulative_share >= rule.threshold - 1e-12)
        k = int(hits[0]) + 1 if hits.size else len(model.eigenvalues)
    else:
        raise TypeError(f"unknown retention rule {rule!r}")
    return max(1, k)


def varimax_criterion(L: np.ndarray) -> float:
    """Raw varimax criterion: summed per-column variance of squared loadings."""
    p = L.shape[0]
    sq = L**2
    return float(np.sum(p * np.sum(sq**2, axis=0) - np.sum(sq, axis=0) ** 2) / p**2)


def _varimax_sweeps(L: np.ndarray, tol: float, max_sweeps: int):
    """Kaiser's pairwise planar rotations. Returns (rotated, T, trace, sweeps)."""
    p, k = L.shape
    B = L.copy()
    T = np.eye(k)
    trace = [varimax_criterion(B)]
    for sweep in range(1, max_sweeps + 1):
        for i in range(k - 1):
            for j in range(i + 1, k):
                x, y = B[:, i], B[:, j]
                u = x * x - y * y
                v = 2.0 * x * y
                num = 2.0 * (p * np.dot(u, v) - u.sum() * v.sum())
                den = p * (np.dot(u, u) - np.dot(v, v)) - (u.sum() ** 2 - v.sum() ** 2)
                phi = math.atan2(num, den) / 4.0
                c, s = math.cos(phi), math.sin(phi)
                R = np.array([[c, -s], [s, c]])
                B[:, [i, j]] = B[:, [i, j]] @ R
                T[:, [i, j]] = T[:, [i, j]] @ R
        trace.append(varimax_criterion(B))
        if trace[-1] - trace[-2] < tol:
            return B, T, trace, sweep
    raise NoConvergence(f"varimax did not converge in {max_sweeps} sweeps")


def varimax_rotate(
    model: PcaModel,
    k: int,
    kaiser_normalize: bool = True,
    tol: float = VARIMAX_TOL,
    max_sweeps: int = VARIMAX_MAX_SWEEPS,
) -> RotatedModel:
    """Varimax-rotate the first ``k`` loading columns.

    Rotated columns are ordered by descending sum of squared loadings and
    signed so that each column's largest-magnitude loading is positive.
    """
    return rotate_loadings(model.loadings[:, :k], model.feature_names, kaiser_normalize, tol, max_sweeps)


def rotate_loadings(
    loadings,
    feature_names: Sequence[str] | None = None,
    kaiser_normalize: bool = True,
    tol: float = VARIMAX_TOL,
    max_sweeps: int = VARIMAX_MAX_SWEEPS,
) -> RotatedModel:
    L = np.asarray(loadings, dtype=float)
    p, k = L.shape
    if k < 1:
        raise ValueError("need at least one component to rotate")
    names = tuple(feature_names) if feature_names is not None else tuple(f"V{i + 1}" for i in range(p))

    if k == 1:
        B, T, trace, sweeps = L.copy(), np.eye(1), [varimax_criterion(L)], 0
    else:
        if kaiser_normalize:
            h = np.sqrt(np.sum(L**2, axis=1))
            h[h == 0] = 1.0
            _, T, trace, sweeps = _varimax_sweeps(L / h[:, None], tol, max_sweeps)
        else:
            _, T, trace, sweeps = _varimax_sweeps(L, tol, max_sweeps)
        B = L @ T

    order = np.argsort(-np.sum(B**2, axis=0), kind="stable")
    B = B[:, order]
    T = T[:, order]
    for j in range(k):
        if B[np.argmax(np.abs(B[:, j])), j] < 0:
            B[:, j] = -B[:, j]
            T[:, j] = -T[:, j]
    return RotatedModel(names, L.copy(), B, T, tuple(trace), sweeps)


def score_coefficients(rm: RotatedModel, corr) -> np.ndarray:
    """Regression-method score coefficients ``corr^-1 @ rotated_loadings``."""
    R = np.asarray(corr, dtype=float)
    if R.shape[0] != rm.rotated_loadings.shape[0]:
        raise DimensionMismatch("correlation matrix and loadings disagree on feature count")
    smallest = sym_eigen(R).eigenvalues[-1]
    if smallest <= 1e-10:
        raise SingularCorrelation(f"correlation matrix is singular (smallest eigenvalue {smallest:.3g})")
    return np.linalg.solve(R, rm.rotated_loadings)


def with_scores(rm: RotatedModel, corr) -> RotatedModel:
    return replace(rm, score_coefficients=score_coefficients(rm, corr))


def project(rm: RotatedModel, scores_W, standardized_row) -> np.ndarray:
    """Component scores ``z^T W`` for one standardized observation."""
    W = np.asarray(scores_W, dtype=float)
    z = np.asarray(standardized_row, dtype=float)
    if z.ndim != 1 or z.shape[0] != W.shape[0] or W.shape[0] != len(rm.feature_names):
        raise DimensionMismatch(f"row has {z.shape} entries, model expects {len(rm.feature_names)}")
    return z @ W
