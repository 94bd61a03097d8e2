import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from distress_lab.finstat import CompanyRecord, YearStatement  # noqa: E402


def make_year(year, **kw):
    base = dict(
        turnover=1_000_000.0,
        net_profit_loss=150_000.0,
        total_assets=2_000_000.0,
        equity=800_000.0,
        total_debts=1_200_000.0,
        current_assets=600_000.0,
        current_liabilities=400_000.0,
        working_capital=200_000.0,
        employees=50.0,
        operating_revenue=1_050_000.0,
    )
    base.update(kw)
    return YearStatement(year=year, **base)


def make_record(cid="A", prev=None, cur=None, **flags):
    return CompanyRecord(
        company_id=cid,
        year_prev=make_year(2007, **(prev or {})),
        year_cur=make_year(2008, **(cur or {})),
        **flags,
    )


@pytest.fixture
def record():
    return make_record()


def logit_corpus(seed, n=200, beta=(-0.8, 0.0075, -1.5), features=("I1", "I7")):
    """Rows drawn from a known logit; the last coefficient is the intercept."""
    import numpy as np

    from distress_lab.finstat import Dataset

    rng = np.random.default_rng(seed)
    scale = {"I1": 2.0, "I2": 1.5, "I7": 80.0}
    centre = {"I1": 0.0, "I2": 0.5, "I7": 150.0}
    X = np.column_stack([centre[f] + scale[f] * rng.standard_normal(n) for f in features])
    eta = X @ np.asarray(beta[:-1]) + beta[-1]
    y = (rng.uniform(size=n) < 1.0 / (1.0 + np.exp(-eta))).astype(int)
    return Dataset.from_arrays(list(features), X, y)
