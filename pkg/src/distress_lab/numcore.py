"""Numerical primitives: standardization, correlation, Jacobi eigensolver, tail probabilities.

Matrices are plain 2-D ``numpy`` float arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstantColumn, NegativeStatistic, NoConvergence, NotSymmetric, TooFewRows

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
MAX_EIGEN_SIZE = 64


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    return a


def _check_columns(a: np.ndarray):
    if a.shape[0] < 2:
        raise TooFewRows(f"need at least 2 rows, got {a.shape[0]}")
    for j in range(a.shape[1]):
        if np.ptp(a[:, j]) == 0:
            raise ConstantColumn(j)


def standardize(m) -> np.ndarray:
    """Centre each column and scale it to unit sample (n-1) standard deviation."""
    a = as_matrix(m)
    _check_columns(a)
    centred = a - a.mean(axis=0)
    sd = np.sqrt((centred**2).sum(axis=0) / (a.shape[0] - 1))
    return centred / sd


def correlation_matrix(m) -> np.ndarray:
    """Pearson correlation matrix of the columns of ``m``."""
    z = standardize(m)
    r = z.T @ z / (z.shape[0] - 1)
    r = np.clip((r + r.T) / 2, -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return r


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns aligned with eigenvalues
    sweeps: int = 0


def sym_eigen(a, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenResult:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Eigenvalues are returned in non-increasing order. Each eigenvector is
    signed so that its first nonzero component is positive.
    """
    A = as_matrix(a).copy()
    n = A.shape[0]
    if A.shape[1] != n:
        raise NotSymmetric(f"matrix is {A.shape[0]}x{A.shape[1]}, not square")
    if n > MAX_EIGEN_SIZE:
        raise ValueError(f"sym_eigen supports at most {MAX_EIGEN_SIZE}x{MAX_EIGEN_SIZE}")
    if n and np.max(np.abs(A - A.T)) > 1e-10:
        raise NotSymmetric("max asymmetry exceeds 1e-10")
    A = (A + A.T) / 2
    V = np.eye(n)
    # off-diagonal threshold is absolute for unit-scale input, relative otherwise
    thresh = tol * max(1.0, float(np.max(np.abs(A))) if n else 1.0)

    sweeps = 0
    while True:
        off = np.abs(A - np.diag(np.diag(A)))
        if n < 2 or off.max() < thresh:
            break
        if sweeps >= max_sweeps:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < thresh * 1e-3:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) plane rotation
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq

    vals = np.diag(A).copy()
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    V = V[:, order]
    for j in range(n):
        nz = np.flatnonzero(np.abs(V[:, j]) > 1e-12)
        if nz.size and V[nz[0], j] < 0:
            V[:, j] = -V[:, j]
    return EigenResult(vals, V, sweeps)


# --- tail probabilities ------------------------------------------------------

_EPS = 1e-16
_FPMIN = 1e-300
_MAX_TERMS = 10_000


def _gamma_p_series(a: float, x: float) -> float:
    """Lower regularized incomplete gamma P(a, x) by its power series (x < a + 1)."""
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_TERMS):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise NoConvergence("incomplete gamma series did not converge")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_contfrac(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x) by Lentz's continued fraction (x >= a + 1)."""
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_TERMS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise NoConvergence("incomplete gamma continued fraction did not converge")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gamma_q(a: float, x: float) -> float:
    """Upper regularized incomplete gamma function Q(a, x) = 1 - P(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_contfrac(a, x)


def chi_square_sf(x: float, df: float) -> float:
    """Upper-tail probability of a chi-square variate with ``df`` degrees of freedom."""
    if not df > 0:
        raise ValueError("degrees of freedom must be positive")
    if x < 0:
        raise NegativeStatistic(f"chi-square statistic {x} is negative")
    return gamma_q(df / 2.0, x / 2.0)


def std_normal_sf(z: float) -> float:
    """Upper-tail probability of the standard normal distribution."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def two_sided_normal_p(z: float) -> float:
    return 2.0 * std_normal_sf(abs(z))
