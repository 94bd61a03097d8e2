"""Exception hierarchy shared by every analysis module."""


class DistressLabError(Exception):
    """Base class for all errors raised by distress_lab."""


# --- ingestion -------------------------------------------------------------

class MissingColumn(DistressLabError, ValueError):
    def __init__(self, column):
        super().__init__(f"missing required column {column!r}")
        self.column = column


class MalformedNumber(DistressLabError, ValueError):
    def __init__(self, row, col, text):
        super().__init__(f"row {row}, column {col!r}: cannot parse {text!r} as a number")
        self.row = row
        self.col = col
        self.text = text


class DuplicateCompanyYear(DistressLabError, ValueError):
    def __init__(self, company_id, year):
        super().__init__(f"company {company_id!r} has more than one row for year {year}")
        self.company_id = company_id
        self.year = year


class MissingYearPair(DistressLabError, ValueError):
    def __init__(self, company_id, detail):
        super().__init__(f"company {company_id!r}: {detail}")
        self.company_id = company_id


class NonPositiveTotalAssets(DistressLabError, ValueError):
    def __init__(self, company_id, value):
        super().__init__(f"company {company_id!r}: total assets {value} must be positive")
        self.company_id = company_id


class EmptyDataset(DistressLabError, ValueError):
    pass


class SingleClassDataset(DistressLabError, ValueError):
    pass


class InvalidFeature(DistressLabError, ValueError):
    def __init__(self, code, detail="not a valid ratio code"):
        super().__init__(f"{code}: {detail}")
        self.code = code


# --- numerics --------------------------------------------------------------

class ConstantColumn(DistressLabError, ValueError):
    def __init__(self, col):
        super().__init__(f"column {col} has zero variance")
        self.col = col


class NotSymmetric(DistressLabError, ValueError):
    pass


class NoConvergence(DistressLabError, RuntimeError):
    pass


class NegativeStatistic(DistressLabError, ValueError):
    pass


class TooFewRows(DistressLabError, ValueError):
    pass


class DimensionMismatch(DistressLabError, ValueError):
    pass


class SingularCorrelation(DistressLabError, ValueError):
    pass


# --- models ----------------------------------------------------------------

class InvalidK(DistressLabError, ValueError):
    pass


class LabelCountMismatch(DistressLabError, ValueError):
    pass


class DegenerateFeature(DistressLabError, ValueError):
    pass


class PerfectSeparation(DistressLabError, RuntimeError):
    pass


class NotConverged(DistressLabError, ValueError):
    pass


class InvalidFraction(DistressLabError, ValueError):
    pass
