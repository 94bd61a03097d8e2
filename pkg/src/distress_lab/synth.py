"""Seeded synthetic corpora for desk testing.

These generators are test scaffolding. Their distributions are chosen so the
labelling rules produce a requested class balance; they make no claim about
real company financials.

Statement generator, per company (current year):

* total assets ~ lognormal(ln 5e7, 1.0); prior year = current / (1 + g), g ~ N(0.05, 0.12)
* turnover = total assets * U(0.3, 1.5); prior year via growth ~ N(0.05, 0.2)
* employees = round(lognormal(ln 300, 1.0)), at least 1
* net P/L = margin * turnover, margin sign and size drawn per distress reason
* equity share of assets U(0.35, 0.85) healthy, lower for distressed firms;
  debts = assets - equity
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import InvalidFraction
from .finstat import (
    RATIO_CODES,
    CompanyRecord,
    Dataset,
    YearStatement,
    records_to_csv,
)

# reason mix among distressed firms: two-year losses, two-year unpaid, current-year loss
REASON_MIX = (8, 4, 6)


def _reason_counts(m: int) -> list[int]:
    total = sum(REASON_MIX)
    two_loss = int(round(m * REASON_MIX[0] / total))
    unpaid = int(round(m * REASON_MIX[1] / total))
    unpaid = min(unpaid, m - two_loss)
    return [two_loss, unpaid, m - two_loss - unpaid]


def _statement(rng, year, total_assets, turnover, employees, margin, equity_share):
    npl = margin * turnover
    equity = total_assets * equity_share
    debts = total_assets - equity
    current_assets = total_assets * rng.uniform(0.2, 0.6)
    current_liabilities = debts * rng.uniform(0.3, 0.8)
    return YearStatement(
        year=year,
        turnover=round(turnover, 2),
        net_profit_loss=round(npl, 2),
        total_assets=round(total_assets, 2),
        equity=round(equity, 2),
        total_debts=round(debts, 2),
        current_assets=round(current_assets, 2),
        current_liabilities=round(current_liabilities, 2),
        working_capital=round(current_assets - current_liabilities, 2),
        employees=float(employees),
        operating_revenue=round(turnover * rng.uniform(1.0, 1.1), 2),
    )


def generate_records(seed: int, n: int = 55, distress_fraction: float = 18 / 55, year: int = 2008) -> list[CompanyRecord]:
    if not 0.0 < distress_fraction < 1.0:
        raise InvalidFraction(f"distress fraction must lie in (0, 1), got {distress_fraction}")
    if n < 4:
        raise ValueError("need at least 4 companies")
    rng = np.random.default_rng(seed)
    m = min(max(int(round(n * distress_fraction)), 1), n - 1)
    kinds = ["healthy"] * (n - m)
    for kind, count in zip(("two_loss", "unpaid", "current_loss"), _reason_counts(m)):
        kinds += [kind] * count
    kinds = [kinds[i] for i in rng.permutation(n)]

    records = []
    for idx, kind in enumerate(kinds):
        ta_cur = math.exp(rng.normal(math.log(5e7), 1.0))
        ta_prev = ta_cur / (1.0 + max(rng.normal(0.05, 0.12), -0.5))
        to_cur = ta_cur * rng.uniform(0.3, 1.5)
        to_prev = to_cur / (1.0 + max(rng.normal(0.05, 0.2), -0.6))
        emp_cur = max(1, int(round(math.exp(rng.normal(math.log(300), 1.0)))))
        emp_prev = max(1, int(round(emp_cur * rng.uniform(0.9, 1.1))))
        unpaid_prev = unpaid_cur = loss_pp = False
        if kind == "healthy":
            m_cur, m_prev = rng.uniform(0.01, 0.15), rng.uniform(0.005, 0.15)
            eq = rng.uniform(0.35, 0.85)
            # an isolated late payment is not a distress signal
            unpaid_cur = bool(rng.random() < 0.1)
        elif kind == "two_loss":
            m_cur, m_prev = -rng.uniform(0.01, 0.3), -rng.uniform(0.01, 0.25)
            eq = rng.uniform(0.05, 0.5)
            loss_pp = bool(rng.random() < 0.5)
        elif kind == "unpaid":
            m_cur, m_prev = rng.uniform(0.001, 0.05), rng.uniform(0.001, 0.05)
            eq = rng.uniform(0.1, 0.5)
            unpaid_prev = unpaid_cur = True
        else:
            m_cur, m_prev = -rng.uniform(0.005, 0.15), rng.uniform(0.005, 0.08)
            eq = rng.uniform(0.1, 0.6)
        eq_prev = min(max(eq + rng.normal(0.0, 0.03), 0.02), 0.95)
        records.append(
            CompanyRecord(
                company_id=f"RO{idx + 1:03d}",
                year_prev=_statement(rng, year - 1, ta_prev, to_prev, emp_prev, m_prev, eq_prev),
                year_cur=_statement(rng, year, ta_cur, to_cur, emp_cur, m_cur, eq),
                unpaid_obligations_prev=unpaid_prev,
                unpaid_obligations_cur=unpaid_cur,
                loss_prev_prev=loss_pp,
            )
        )
    return records


def generate_synthetic(seed: int, n: int = 55, distress_fraction: float = 18 / 55) -> str:
    """Two-year statement CSV for ``n`` companies, deterministic per seed."""
    return records_to_csv(generate_records(seed, n, distress_fraction))


def latent_factor_matrix(seed: int, n: int, loadings, noise_sd: float = 0.1) -> np.ndarray:
    """``n`` draws of ``F @ loadings.T + noise`` with standard-normal factors ``F``."""
    L = np.asarray(loadings, dtype=float)
    rng = np.random.default_rng(seed)
    F = rng.standard_normal((n, L.shape[1]))
    return F @ L.T + noise_sd * rng.standard_normal((n, L.shape[0]))


def latent_factor_dataset(seed: int, n: int, loadings, features: Sequence[str] | None = None,
                          noise_sd: float = 0.1) -> Dataset:
    X = latent_factor_matrix(seed, n, loadings, noise_sd)
    features = list(features) if features is not None else list(RATIO_CODES[: X.shape[1]])
    y = (np.arange(n) % 2).astype(int)
    return Dataset.from_arrays(features, X, y)


def rule_corpus(seed: int, n: int = 300) -> Dataset:
    """All-14-ratio corpus whose labels follow the reference two-level rule set.

    I1 < 0.04 and I2 < 0.03 -> distressed; I1 >= 0.04 and I13 >= 44.17 ->
    distressed; healthy otherwise. Remaining ratios are pure noise.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 14))
    X[:, 0] = rng.uniform(-0.1, 0.2, n)
    X[:, 1] = rng.uniform(-0.05, 0.06, n)
    X[:, 12] = rng.uniform(0.0, 50.0, n)
    low = X[:, 0] < 0.04
    y = np.where(low, X[:, 1] < 0.03, X[:, 12] >= 44.17).astype(int)
    return Dataset.from_arrays(RATIO_CODES, X, y)
