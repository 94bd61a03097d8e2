"""Statement ingestion, the 14 financial ratios and distress labelling.

Ratio codes follow the usual grouping:

========  ===============================  =====================================
code      name                             definition
========  ===============================  =====================================
I1        Profit margin                    net P/L / turnover * 100
I2        Return on assets                 net P/L / total assets * 100
I3        Return on equity                 net P/L / equity * 100
I4        Profit per employee              net P/L / employees
I5        Operating revenue per employee   operating revenue / employees
I6        Current ratio                    current assets / current liabilities
I7        Debts on equity                  total debts / equity * 100
I8        Debts on total assets            total debts / total assets * 100
I9        Working capital per employee     working capital / employees
I10       Total assets per employee        total assets / employees
I11       Net profit growth                (P/L_1 - P/L_0) / P/L_0
I12       Total assets growth              (TA_1 - TA_0) / TA_0
I13       Turnover growth                  (T_1 - T_0) / T_0
I14       Company size                     ln(total assets)
========  ===============================  =====================================
"""
from __future__ import annotations

import csv
import enum
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateCompanyYear,
    EmptyDataset,
    InvalidFeature,
    MalformedNumber,
    MissingColumn,
    MissingYearPair,
    NonPositiveTotalAssets,
    SingleClassDataset,
)

log = logging.getLogger(__name__)

RATIO_CODES: tuple[str, ...] = tuple(f"I{i}" for i in range(1, 15))

RATIO_NAMES = {
    "I1": "Profit Margin",
    "I2": "Return on Assets",
    "I3": "Return on Equity",
    "I4": "Profit per employee",
    "I5": "Operating Revenue per employee",
    "I6": "Current ratio",
    "I7": "Debts on Equity",
    "I8": "Debts on Total Assets",
    "I9": "Working capital per employee",
    "I10": "Total Assets per employee",
    "I11": "Growth rate on net profit",
    "I12": "Growth rate on total assets",
    "I13": "Turnover growth",
    "I14": "Company size",
}

STATEMENT_FIELDS = (
    "turnover",
    "net_profit_loss",
    "total_assets",
    "equity",
    "total_debts",
    "current_assets",
    "current_liabilities",
    "working_capital",
    "employees",
    "operating_revenue",
)

CSV_COLUMNS = (
    ("company_id", "year")
    + STATEMENT_FIELDS
    + ("unpaid_obligations", "loss_prior_year")
)


def check_codes(codes: Iterable[str]) -> list[str]:
    """Validate and normalise a list of ratio codes (``"i7"`` -> ``"I7"``)."""
    out = []
    for code in codes:
        norm = str(code).strip().upper()
        if norm not in RATIO_CODES:
            raise InvalidFeature(code)
        out.append(norm)
    if not out:
        raise InvalidFeature("<empty>", "at least one ratio code is required")
    return out


class Label(enum.Enum):
    HEALTHY = "Healthy"
    DISTRESSED = "Distressed"

    @property
    def y(self) -> int:
        """Binary coding used by the models: distressed = 1."""
        return 1 if self is Label.DISTRESSED else 0


class Reason(enum.Enum):
    TWO_YEAR_LOSSES = "TwoYearLosses"
    TWO_YEAR_UNPAID_OBLIGATIONS = "TwoYearUnpaidObligations"
    CURRENT_YEAR_LOSS = "CurrentYearLoss"
    NONE = "None"


@dataclass(frozen=True)
class HealthLabel:
    label: Label
    reason: Reason

    def __post_init__(self):
        if (self.reason is Reason.NONE) != (self.label is Label.HEALTHY):
            raise ValueError(f"inconsistent label/reason: {self.label}, {self.reason}")


@dataclass(frozen=True)
class YearStatement:
    year: int
    turnover: float
    net_profit_loss: float
    total_assets: float
    equity: float
    total_debts: float
    current_assets: float
    current_liabilities: float
    working_capital: float
    employees: float
    operating_revenue: float


@dataclass(frozen=True)
class CompanyRecord:
    company_id: str
    year_prev: YearStatement
    year_cur: YearStatement
    unpaid_obligations_prev: bool = False
    unpaid_obligations_cur: bool = False
    loss_prev_prev: bool = False

    def __post_init__(self):
        if self.year_cur.year != self.year_prev.year + 1:
            raise MissingYearPair(
                self.company_id,
                f"years {self.year_prev.year} and {self.year_cur.year} are not consecutive",
            )
        for st in (self.year_prev, self.year_cur):
            if st.employees < 0:
                raise ValueError(f"company {self.company_id!r}: negative employee count")


@dataclass(frozen=True)
class RatioVector:
    """The 14 ratios of one company-year.

    ``values[i]`` holds ratio ``I{i+1}``; ``valid[i]`` is False when its
    denominator was zero, in which case the stored value is a 0.0 placeholder.
    """

    values: tuple[float, ...]
    valid: tuple[bool, ...] = (True,) * 14
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.values) != 14 or len(self.valid) != 14:
            raise ValueError("a RatioVector holds exactly 14 ratios")

    def get(self, code: str) -> float:
        return self.values[_index(code)]

    def is_valid(self, code: str) -> bool:
        return self.valid[_index(code)]

    def select(self, codes: Sequence[str]) -> np.ndarray:
        return np.array([self.get(c) for c in codes], dtype=float)

    @property
    def validity_mask(self) -> tuple[bool, ...]:
        return self.valid

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RatioVector":
        """Build a vector from ``{code: value}``; unlisted ratios are 0 and valid."""
        values = [0.0] * 14
        for code, v in mapping.items():
            values[_index(code)] = float(v)
        return cls(tuple(values))


def _index(code: str) -> int:
    try:
        return RATIO_CODES.index(code.upper())
    except ValueError:
        raise InvalidFeature(code) from None


def _add_ratio_properties():
    for i, code in enumerate(RATIO_CODES):
        setattr(RatioVector, code.lower(), property(lambda self, i=i: self.values[i]))


_add_ratio_properties()


# --- parsing ---------------------------------------------------------------

def _parse_number(text, row, col):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise MalformedNumber(row, col, text) from None
    if not math.isfinite(value):
        raise MalformedNumber(row, col, text)
    return value


def _parse_flag(text, row, col):
    value = _parse_number(text, row, col)
    if value not in (0.0, 1.0):
        raise MalformedNumber(row, col, text)
    return value == 1.0


def parse_statements(csv_text: str) -> list[CompanyRecord]:
    """Parse the two-rows-per-company statement CSV into records.

    Records come back in order of each company's first appearance.
    """
    reader = csv.DictReader(io.StringIO(csv_text))
    header = [h.strip() for h in (reader.fieldnames or [])]
    for col in CSV_COLUMNS:
        if col not in header:
            raise MissingColumn(col)
    reader.fieldnames = header

    by_company: dict[str, dict[int, tuple[YearStatement, bool, bool]]] = {}
    # data rows start at line 2 (line 1 is the header)
    for lineno, raw in enumerate(reader, start=2):
        company_id = (raw["company_id"] or "").strip()
        if not company_id:
            raise MalformedNumber(lineno, "company_id", raw["company_id"])
        year_f = _parse_number(raw["year"], lineno, "year")
        if year_f != int(year_f):
            raise MalformedNumber(lineno, "year", raw["year"])
        year = int(year_f)
        nums = {f: _parse_number(raw[f], lineno, f) for f in STATEMENT_FIELDS}
        unpaid = _parse_flag(raw["unpaid_obligations"], lineno, "unpaid_obligations")
        loss_prior = _parse_flag(raw["loss_prior_year"], lineno, "loss_prior_year")
        years = by_company.setdefault(company_id, {})
        if year in years:
            raise DuplicateCompanyYear(company_id, year)
        years[year] = (YearStatement(year=year, **nums), unpaid, loss_prior)

    records = []
    for company_id, years in by_company.items():
        if len(years) != 2:
            raise MissingYearPair(
                company_id, f"expected two consecutive years, found {sorted(years)}"
            )
        y0, y1 = sorted(years)
        if y1 != y0 + 1:
            raise MissingYearPair(company_id, f"years {y0} and {y1} are not consecutive")
        prev, unpaid_prev, loss_pp = years[y0]
        cur, unpaid_cur, _ = years[y1]
        records.append(
            CompanyRecord(
                company_id=company_id,
                year_prev=prev,
                year_cur=cur,
                unpaid_obligations_prev=unpaid_prev,
                unpaid_obligations_cur=unpaid_cur,
                loss_prev_prev=loss_pp,
            )
        )
    return records


def records_to_csv(records: Sequence[CompanyRecord]) -> str:
    """Inverse of :func:`parse_statements`."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        for st, unpaid, loss_prior in (
            (rec.year_prev, rec.unpaid_obligations_prev, rec.loss_prev_prev),
            (rec.year_cur, rec.unpaid_obligations_cur, False),
        ):
            writer.writerow(
                [rec.company_id, st.year]
                + [_fmt(getattr(st, f)) for f in STATEMENT_FIELDS]
                + [int(unpaid), int(loss_prior)]
            )
    return buf.getvalue()


def _fmt(x: float) -> str:
    if float(x).is_integer():
        return str(int(x))
    return f"{x:.2f}"


# --- ratios ----------------------------------------------------------------

def compute_ratios(rec: CompanyRecord) -> RatioVector:
    cur, prev = rec.year_cur, rec.year_prev
    if not cur.total_assets > 0:
        raise NonPositiveTotalAssets(rec.company_id, cur.total_assets)

    values = [0.0] * 14
    valid = [True] * 14
    notes = []

    def put(i, num, den, scale=1.0):
        if den == 0:
            valid[i] = False
        else:
            values[i] = num / den * scale

    npl = cur.net_profit_loss
    put(0, npl, cur.turnover, 100.0)
    put(1, npl, cur.total_assets, 100.0)
    put(2, npl, cur.equity, 100.0)
    put(3, npl, cur.employees)
    put(4, cur.operating_revenue, cur.employees)
    put(5, cur.current_assets, cur.current_liabilities)
    put(6, cur.total_debts, cur.equity, 100.0)
    put(7, cur.total_debts, cur.total_assets, 100.0)
    put(8, cur.working_capital, cur.employees)
    put(9, cur.total_assets, cur.employees)
    put(10, npl - prev.net_profit_loss, prev.net_profit_loss)
    put(11, cur.total_assets - prev.total_assets, prev.total_assets)
    put(12, cur.turnover - prev.turnover, prev.turnover)
    values[13] = math.log(cur.total_assets)

    if prev.net_profit_loss < 0:
        msg = f"{rec.company_id}: I11 computed on a negative prior-year net P/L; sign is not interpretable"
        log.debug(msg)
        notes.append(msg)
    for i, ok in enumerate(valid):
        if not ok:
            notes.append(f"{rec.company_id}: {RATIO_CODES[i]} has a zero denominator")
    return RatioVector(tuple(values), tuple(valid), tuple(notes))


def label_company(rec: CompanyRecord) -> HealthLabel:
    """Assign the distress label; only the strongest reason is reported."""
    loss_cur = rec.year_cur.net_profit_loss < 0
    loss_prev = rec.year_prev.net_profit_loss < 0
    if (loss_cur and loss_prev) or (loss_prev and rec.loss_prev_prev):
        return HealthLabel(Label.DISTRESSED, Reason.TWO_YEAR_LOSSES)
    if rec.unpaid_obligations_prev and rec.unpaid_obligations_cur:
        return HealthLabel(Label.DISTRESSED, Reason.TWO_YEAR_UNPAID_OBLIGATIONS)
    if loss_cur:
        return HealthLabel(Label.DISTRESSED, Reason.CURRENT_YEAR_LOSS)
    return HealthLabel(Label.HEALTHY, Reason.NONE)


# --- dataset ---------------------------------------------------------------

@dataclass(frozen=True)
class DatasetRow:
    company_id: str
    ratios: RatioVector
    label: HealthLabel


@dataclass(frozen=True)
class Exclusion:
    company_id: str
    reason: str


@dataclass(frozen=True)
class Dataset:
    rows: tuple[DatasetRow, ...]
    feature_names: tuple[str, ...]
    excluded: tuple[Exclusion, ...] = ()
    imputed: tuple[tuple[str, str], ...] = field(default=())

    def __len__(self):
        return len(self.rows)

    @property
    def company_ids(self) -> list[str]:
        return [r.company_id for r in self.rows]

    def matrix(self, features: Sequence[str] | None = None) -> np.ndarray:
        codes = list(self.feature_names if features is None else features)
        if not self.rows:
            return np.empty((0, len(codes)))
        return np.array([r.ratios.select(codes) for r in self.rows], dtype=float)

    @property
    def y(self) -> np.ndarray:
        return np.array([r.label.label.y for r in self.rows], dtype=float)

    @property
    def n_distressed(self) -> int:
        return int(sum(r.label.label is Label.DISTRESSED for r in self.rows))

    def require_both_classes(self):
        if not self.rows:
            raise EmptyDataset("dataset has no rows")
        k = self.n_distressed
        if k == 0 or k == len(self.rows):
            raise SingleClassDataset(
                f"all {len(self.rows)} rows carry the same label; both classes are required"
            )

    def check_features(self, features: Sequence[str]):
        for code in features:
            if code not in self.feature_names:
                raise InvalidFeature(code, "not part of this dataset")

    @classmethod
    def from_arrays(cls, features: Sequence[str], X, y, ids=None) -> "Dataset":
        """Wrap a plain (n, p) matrix and 0/1 labels as a Dataset.

        Ratios not listed in ``features`` are set to 0.
        """
        features = check_codes(features)
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if X.ndim != 2 or X.shape[1] != len(features) or len(y) != X.shape[0]:
            raise ValueError("X must be (n, len(features)) and y of length n")
        rows = []
        for i in range(X.shape[0]):
            rv = RatioVector.from_mapping(dict(zip(features, X[i])))
            lab = (
                HealthLabel(Label.DISTRESSED, Reason.CURRENT_YEAR_LOSS)
                if y[i]
                else HealthLabel(Label.HEALTHY, Reason.NONE)
            )
            rows.append(DatasetRow(str(ids[i]) if ids is not None else f"c{i}", rv, lab))
        return cls(tuple(rows), tuple(features))


def build_dataset(
    records: Sequence[CompanyRecord],
    features: Sequence[str] = RATIO_CODES,
    impute: bool = False,
    require_both_classes: bool = False,
) -> Dataset:
    """Compute ratios and labels for ``records`` restricted to ``features``.

    Rows whose selected ratios include an invalid (zero-denominator) entry are
    excluded and reported in ``Dataset.excluded``, unless ``impute`` is set, in
    which case the entry is replaced by the mean of the valid values.
    Records with non-positive current total assets are always excluded.
    """
    features = tuple(check_codes(features))
    if not records:
        raise EmptyDataset("no company records")

    computed = []
    excluded = []
    for rec in records:
        try:
            rv = compute_ratios(rec)
        except NonPositiveTotalAssets as exc:
            excluded.append(Exclusion(rec.company_id, str(exc)))
            continue
        computed.append((rec.company_id, rv, label_company(rec)))

    imputed = []
    if impute:
        means = {}
        for code in features:
            vals = [rv.get(code) for _, rv, _ in computed if rv.is_valid(code)]
            means[code] = float(np.mean(vals)) if vals else None
        rows = []
        for cid, rv, lab in computed:
            bad = [c for c in features if not rv.is_valid(c)]
            if any(means[c] is None for c in bad):
                excluded.append(Exclusion(cid, f"no valid values to impute {bad}"))
                continue
            if bad:
                values = list(rv.values)
                valid = list(rv.valid)
                for c in bad:
                    values[_index(c)] = means[c]
                    valid[_index(c)] = True
                    imputed.append((cid, c))
                rv = RatioVector(tuple(values), tuple(valid), rv.notes)
            rows.append(DatasetRow(cid, rv, lab))
    else:
        rows = []
        for cid, rv, lab in computed:
            bad = [c for c in features if not rv.is_valid(c)]
            if bad:
                excluded.append(Exclusion(cid, "invalid ratio(s) " + ", ".join(bad)))
                continue
            rows.append(DatasetRow(cid, rv, lab))

    for ex in excluded:
        log.info("excluded %s: %s", ex.company_id, ex.reason)
    if not rows:
        raise EmptyDataset("no usable rows after exclusions")
    ds = Dataset(tuple(rows), features, tuple(excluded), tuple(imputed))
    if require_both_classes:
        ds.require_both_classes()
    return ds
