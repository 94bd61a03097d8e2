"""Binary logit by Newton maximum likelihood, with the usual inference block.

Distressed companies are coded y = 1. Coefficients are ordered as the
features followed by the intercept ``C``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidFeature, NoConvergence, NotConverged, PerfectSeparation
from .finstat import Dataset, Label, RatioVector, check_codes
from .numcore import chi_square_sf, two_sided_normal_p

SEPARATION_BOUND = 30.0


@dataclass(frozen=True)
class LogitSpec:
    feature_names: tuple[str, ...] = ("I1", "I7")
    include_intercept: bool = True
    max_iterations: int = 100
    tolerance: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if not self.feature_names and not self.include_intercept:
            raise ValueError("a logit needs at least one covariate or an intercept")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")

    @property
    def coef_names(self) -> list[str]:
        return list(self.feature_names) + (["C"] if self.include_intercept else [])


@dataclass(frozen=True)
class LogitFit:
    spec: LogitSpec
    beta: np.ndarray
    std_errors: np.ndarray
    covariance: np.ndarray
    log_likelihood: float
    restricted_log_likelihood: float
    iterations: int
    converged: bool
    n_obs: int
    n_dep1: int
    history: tuple[float, ...] = ()
    fitted: np.ndarray = field(default=None, repr=False)
    y: np.ndarray = field(default=None, repr=False)

    @property
    def n_coef(self) -> int:
        return len(self.beta)


@dataclass(frozen=True)
class FitStatistics:
    z_stats: np.ndarray
    p_values: np.ndarray
    mcfadden_r2: float = math.nan
    lr_statistic: float = math.nan
    lr_df: int = 0
    lr_p_value: float = math.nan
    aic: float = math.nan
    schwarz: float = math.nan
    hannan_quinn: float = math.nan
    avg_log_likelihood: float = math.nan
    mean_dep: float = math.nan
    sd_dep: float = math.nan
    se_regression: float = math.nan
    sum_squared_resid: float = math.nan


def design_matrix(ds: Dataset, spec: LogitSpec) -> np.ndarray:
    ds.check_features(spec.feature_names)
    X = ds.matrix(spec.feature_names)
    if spec.include_intercept:
        X = np.column_stack([X, np.ones(len(ds))])
    return X


def _loglik(beta, X, y) -> float:
    eta = X @ beta
    # log p = -log(1 + e^-eta), log(1 - p) = -log(1 + e^eta)
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def _prob(eta):
    return np.exp(-np.logaddexp(0.0, -eta))


def log_likelihood(beta, ds: Dataset, spec: LogitSpec) -> float:
    beta = np.asarray(beta, dtype=float)
    X = design_matrix(ds, spec)
    if beta.shape != (X.shape[1],):
        raise DimensionMismatch(f"beta has {beta.shape} entries, expected {X.shape[1]}")
    return _loglik(beta, X, ds.y)


def score_vector(beta, ds: Dataset, spec: LogitSpec) -> np.ndarray:
    """Analytic gradient of the log-likelihood."""
    X = design_matrix(ds, spec)
    return X.T @ (ds.y - _prob(X @ np.asarray(beta, dtype=float)))


def restricted_log_likelihood(n_obs: int, n_dep1: int) -> float:
    """Maximised log-likelihood of the intercept-only model."""
    ll = 0.0
    if n_dep1:
        ll += n_dep1 * math.log(n_dep1 / n_obs)
    if n_obs - n_dep1:
        ll += (n_obs - n_dep1) * math.log((n_obs - n_dep1) / n_obs)
    return ll


def newton_fit(X, y, include_intercept: bool = True, max_iterations: int = 100, tolerance: float = 1e-8):
    """Newton-Raphson with step halving on a design matrix.

    Converged once each score component divided by ``max(1, max |X_j|)`` is
    below ``tolerance``. Returns ``(beta, loglik, iterations, converged, history)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    beta = np.zeros(k)
    if include_intercept:
        ybar = y.mean()
        beta[-1] = math.log(ybar / (1.0 - ybar))
    ll = _loglik(beta, X, y)
    history = [ll]
    # score components are measured in units of their covariate's scale, so a
    # ratio quoted in percent is held to the same standard as one quoted as a fraction
    scale = np.maximum(1.0, np.max(np.abs(X), axis=0))
    for it in range(max_iterations + 1):
        p = _prob(X @ beta)
        grad = X.T @ (y - p)
        if np.max(np.abs(grad) / scale) < tolerance:
            return beta, ll, it, True, history
        if it == max_iterations:
            break
        if np.max(np.abs(beta)) > SEPARATION_BOUND:
            raise PerfectSeparation(
                f"coefficients exceed {SEPARATION_BOUND:g} in magnitude while the likelihood "
                f"is still improving (logL={ll:.6g}); the classes are (quasi-)separated"
            )
        info = (X * (p * (1.0 - p))[:, None]).T @ X
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            raise PerfectSeparation("information matrix is singular") from None
        t = 1.0
        for _ in range(60):
            cand = beta + t * step
            ll_new = _loglik(cand, X, y)
            if ll_new >= ll:
                break
            t /= 2.0
        else:
            # no ascent possible along the Newton direction at float precision
            p = _prob(X @ beta)
            if np.max(np.abs(X.T @ (y - p)) / scale) < max(tolerance, 1e-6):
                return beta, ll, it, True, history
            raise NoConvergence("step halving failed to increase the likelihood")
        beta, ll = cand, ll_new
        history.append(ll)
    return beta, ll, max_iterations, False, history


def fit_logit(ds: Dataset, spec: LogitSpec = LogitSpec()) -> LogitFit:
    if spec.feature_names:
        check_codes(spec.feature_names)
    ds.require_both_classes()
    X = design_matrix(ds, spec)
    y = ds.y
    n, k = X.shape
    if n <= k:
        raise ValueError(f"need more observations ({n}) than coefficients ({k})")
    beta, ll, iters, converged, history = newton_fit(
        X, y, spec.include_intercept, spec.max_iterations, spec.tolerance
    )
    if not converged:
        raise NoConvergence(f"Newton iterations did not converge within {spec.max_iterations} steps")
    p = _prob(X @ beta)
    info = (X * (p * (1.0 - p))[:, None]).T @ X
    cov = np.linalg.inv(info)
    cov = (cov + cov.T) / 2
    n1 = int(y.sum())
    return LogitFit(
        spec=spec,
        beta=beta,
        std_errors=np.sqrt(np.diag(cov)),
        covariance=cov,
        log_likelihood=ll,
        restricted_log_likelihood=restricted_log_likelihood(n, n1),
        iterations=iters,
        converged=converged,
        n_obs=n,
        n_dep1=n1,
        history=tuple(history),
        fitted=p,
        y=y,
    )


def predict_prob(beta, rv: RatioVector, spec: LogitSpec) -> float:
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (len(spec.coef_names),):
        raise DimensionMismatch(f"beta has {beta.shape} entries, expected {len(spec.coef_names)}")
    for code in spec.feature_names:
        if not rv.is_valid(code):
            raise InvalidFeature(code, "ratio is invalid in this vector")
    x = list(rv.select(spec.feature_names)) + ([1.0] if spec.include_intercept else [])
    return float(_prob(np.dot(beta, x)))


def coefficient_inference(beta, std_errors) -> tuple[np.ndarray, np.ndarray]:
    """z statistics and two-sided normal p-values."""
    beta = np.asarray(beta, dtype=float)
    se = np.asarray(std_errors, dtype=float)
    z = np.divide(beta, se, out=np.zeros_like(beta), where=se > 0)
    return z, np.array([two_sided_normal_p(v) for v in z])


def inference(fit: LogitFit) -> FitStatistics:
    if not fit.converged:
        raise NotConverged("inference requires a converged fit")
    z, p = coefficient_inference(fit.beta, fit.std_errors)
    return FitStatistics(z_stats=z, p_values=p)


def likelihood_statistics(log_l: float, log_l0: float, n_obs: int, n_coef: int,
                          n_dep1: int | None = None, has_intercept: bool = True) -> dict:
    """Likelihood-based fit statistics; information criteria are per observation."""
    n = n_obs
    K = n_coef
    slopes = K - 1 if has_intercept else K
    lr = 2.0 * (log_l - log_l0)
    out = {
        "mcfadden_r2": 1.0 - log_l / log_l0 if log_l0 != 0 else math.nan,
        "lr_statistic": lr,
        "lr_df": slopes,
        "lr_p_value": chi_square_sf(max(lr, 0.0), slopes) if slopes > 0 else math.nan,
        "aic": (-2.0 * log_l + 2.0 * K) / n,
        "schwarz": (-2.0 * log_l + K * math.log(n)) / n,
        "hannan_quinn": (-2.0 * log_l + 2.0 * K * math.log(math.log(n))) / n,
        "avg_log_likelihood": log_l / n,
    }
    if n_dep1 is not None:
        mean = n_dep1 / n
        out["mean_dep"] = mean
        out["sd_dep"] = math.sqrt(n * mean * (1.0 - mean) / (n - 1))
    return out


def fit_statistics(fit: LogitFit) -> FitStatistics:
    if not fit.converged:
        raise NotConverged("fit statistics require a converged fit")
    z, p = coefficient_inference(fit.beta, fit.std_errors)
    extra = {}
    if fit.fitted is not None:
        ssr = float(np.sum((fit.y - fit.fitted) ** 2))
        extra = {"sum_squared_resid": ssr, "se_regression": math.sqrt(ssr / (fit.n_obs - fit.n_coef))}
    stats = likelihood_statistics(
        fit.log_likelihood, fit.restricted_log_likelihood, fit.n_obs, fit.n_coef,
        fit.n_dep1, fit.spec.include_intercept,
    )
    return FitStatistics(z_stats=z, p_values=p, **stats, **extra)


def classify_cutoff(prob: float, cutoff: float = 0.5) -> Label:
    """Distressed when ``prob >= cutoff``."""
    if not (0.0 <= prob <= 1.0 and 0.0 <= cutoff <= 1.0):
        raise ValueError("probability and cutoff must lie in [0, 1]")
    return Label.DISTRESSED if prob >= cutoff else Label.HEALTHY


def fit_report(fit: LogitFit, stats: FitStatistics | None = None) -> dict:
    """JSON-ready report in the layout of a typical econometrics package printout."""
    stats = fit_statistics(fit) if stats is None else stats
    rows = [
        {
            "variable": name,
            "coefficient": float(b),
            "std_error": float(se),
            "z_statistic": float(z),
            "prob": float(p),
        }
        for name, b, se, z, p in zip(fit.spec.coef_names, fit.beta, fit.std_errors, stats.z_stats, stats.p_values)
    ]
    return {
        "method": "ML - Binary Logit (Newton-Raphson with step halving)",
        "included_observations": fit.n_obs,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "covariance": "observed information (second derivatives)",
        "coefficients": rows,
        "statistics": {
            "mean_dependent_var": stats.mean_dep,
            "sd_dependent_var": stats.sd_dep,
            "se_of_regression": stats.se_regression,
            "akaike_info_criterion": stats.aic,
            "sum_squared_resid": stats.sum_squared_resid,
            "schwarz_criterion": stats.schwarz,
            "log_likelihood": fit.log_likelihood,
            "hannan_quinn_criterion": stats.hannan_quinn,
            "restricted_log_likelihood": fit.restricted_log_likelihood,
            "avg_log_likelihood": stats.avg_log_likelihood,
            "lr_statistic": stats.lr_statistic,
            "lr_df": stats.lr_df,
            "mcfadden_r2": stats.mcfadden_r2,
            "probability_lr_stat": stats.lr_p_value,
            "obs_with_dep_0": fit.n_obs - fit.n_dep1,
            "obs_with_dep_1": fit.n_dep1,
            "total_obs": fit.n_obs,
        },
        "covariance_matrix": fit.covariance.tolist(),
    }


def render_table(report: dict) -> str:
    """Plain-text rendering in the conventional row order."""
    s = report["statistics"]
    out = [
        "Dependent Variable: DISTRESSED",
        f"Method: {report['method']}",
        f"Included observations: {report['included_observations']}",
        f"Convergence achieved after {report['iterations']} iterations",
        "Covariance matrix computed using second derivatives",
        "",
        f"{'Variable':<10}{'Coefficient':>14}{'Std. Error':>14}{'z-Statistic':>14}{'Prob.':>10}",
    ]
    for r in report["coefficients"]:
        out.append(
            f"{r['variable']:<10}{r['coefficient']:>14.6f}{r['std_error']:>14.6f}"
            f"{r['z_statistic']:>14.6f}{r['prob']:>10.4f}"
        )
    pairs = [
        ("Mean dependent var", s["mean_dependent_var"], "S.D. dependent var", s["sd_dependent_var"]),
        ("S.E. of regression", s["se_of_regression"], "Akaike info criterion", s["akaike_info_criterion"]),
        ("Sum squared resid", s["sum_squared_resid"], "Schwarz criterion", s["schwarz_criterion"]),
        ("Log likelihood", s["log_likelihood"], "Hannan-Quinn criter.", s["hannan_quinn_criterion"]),
        ("Restr. log likelihood", s["restricted_log_likelihood"], "Avg. log likelihood", s["avg_log_likelihood"]),
        (f"LR statistic ({s['lr_df']} df)", s["lr_statistic"], "McFadden R-squared", s["mcfadden_r2"]),
    ]
    out.append("")
    for a, va, b, vb in pairs:
        out.append(f"{a:<24}{va:>12.6f}    {b:<24}{vb:>12.6f}")
    out.append(f"{'Probability(LR stat)':<24}{s['probability_lr_stat']:>12.3g}")
    out.append(f"{'Obs with Dep=0':<24}{s['obs_with_dep_0']:>12d}    {'Total obs':<24}{s['total_obs']:>12d}")
    out.append(f"{'Obs with Dep=1':<24}{s['obs_with_dep_1']:>12d}")
    return "\n".join(out) + "\n"
