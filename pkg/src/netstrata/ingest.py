"""Granular record files: schemas, typed records, validation, snapshots."""
from __future__ import annotations

import calendar
import datetime as dt
import enum
import re
from dataclasses import dataclass, field, fields
from decimal import Decimal

from . import _csv
from ._csv import RowError, SchemaError  # noqa: F401  (re-exported)


class InstrumentType(str, enum.Enum):
    DEPOSIT = "deposit"
    CREDIT_LINE = "credit_line"
    REVOLVING_CREDIT = "revolving_credit"
    REVERSE_REPO = "reverse_repo"
    CONVENIENCE_CREDIT = "convenience_credit"
    OTHER = "other"


class SecurityKind(str, enum.Enum):
    DEBT = "debt"
    EQUITY = "equity"
    FUND_SHARE = "fund_share"


class SftKind(str, enum.Enum):
    REPO = "repo"
    BUY_SELLBACK = "buy_sellback"
    SECURITIES_LENDING = "securities_lending"
    MARGIN_LENDING = "margin_lending"


class DatasetKind(str, enum.Enum):
    LOANS = "loans"
    HOLDINGS = "holdings"
    SECURITIES = "securities"
    SFT = "sft"


def add_months(day, months):
    """Calendar month arithmetic, clamping to the last day of the month."""
    total = day.year * 12 + day.month - 1 + months
    year, month = divmod(total, 12)
    month += 1
    return dt.date(year, month, min(day.day, calendar.monthrange(year, month)[1]))


def months_between(start, end):
    """Whole calendar months from ``start`` to ``end`` (floor)."""
    months = (end.year - start.year) * 12 + end.month - start.month
    if add_months(start, months) > end:
        months -= 1
    return months


@dataclass(frozen=True)
class LoanRecord:
    creditor_id: str
    debtor_id: str
    instrument_type: InstrumentType
    outstanding_nominal: Decimal
    origination_date: dt.date
    maturity_date: dt.date | None
    reference_date: dt.date

    def __post_init__(self):
        if self.outstanding_nominal <= 0:
            raise RowError("non-positive amount in outstanding_nominal")
        if self.maturity_date is not None and self.maturity_date < self.origination_date:
            raise RowError("maturity_date before origination_date")

    @property
    def initial_maturity_months(self):
        if self.maturity_date is None:
            return None
        return months_between(self.origination_date, self.maturity_date)

    @property
    def residual_maturity_months(self):
        if self.maturity_date is None:
            return None
        return months_between(self.reference_date, self.maturity_date)


@dataclass(frozen=True)
class HoldingRecord:
    holder_id: str
    isin: str
    market_value: Decimal
    reference_date: dt.date

    def __post_init__(self):
        if self.market_value <= 0:
            raise RowError("non-positive amount in market_value")


@dataclass(frozen=True)
class SecurityRef:
    isin: str
    issuer_id: str
    kind: SecurityKind


@dataclass(frozen=True)
class SftRecord:
    collateral_taker_id: str
    collateral_giver_id: str
    kind: SftKind
    open_amount: Decimal
    open_date: dt.date
    close_date: dt.date | None
    reference_date: dt.date

    def __post_init__(self):
        if self.open_amount <= 0:
            raise RowError("non-positive amount in open_amount")
        if self.close_date is not None and self.close_date < self.open_date:
            raise RowError("close_date before open_date")


_ISIN = re.compile(r"^[A-Z]{2}[A-Z0-9]{9}[0-9]$")


def _isin(row):
    value = _csv.required(row, "isin")
    if not _ISIN.match(value):
        raise RowError(f"malformed ISIN {value!r}")
    return value


def _enum(cls, row, key):
    value = _csv.required(row, key)
    try:
        return cls(value)
    except ValueError:
        raise RowError(f"unknown {key} {value!r}") from None


def _parse_loan(row):
    return LoanRecord(
        _csv.required(row, "creditor_id"), _csv.required(row, "debtor_id"),
        _enum(InstrumentType, row, "instrument_type"),
        _csv.parse_amount(row.get("outstanding_nominal"), "outstanding_nominal"),
        _csv.parse_date(row.get("origination_date"), "origination_date"),
        _csv.parse_date(row.get("maturity_date"), "maturity_date", optional=True),
        _csv.parse_date(row.get("reference_date"), "reference_date"),
    )


def _parse_holding(row):
    return HoldingRecord(
        _csv.required(row, "holder_id"), _isin(row),
        _csv.parse_amount(row.get("market_value"), "market_value"),
        _csv.parse_date(row.get("reference_date"), "reference_date"),
    )


def _parse_security(row):
    return SecurityRef(_isin(row), _csv.required(row, "issuer_id"),
                       _enum(SecurityKind, row, "kind"))


def _parse_sft(row):
    return SftRecord(
        _csv.required(row, "collateral_taker_id"), _csv.required(row, "collateral_giver_id"),
        _enum(SftKind, row, "kind"),
        _csv.parse_amount(row.get("open_amount"), "open_amount"),
        _csv.parse_date(row.get("open_date"), "open_date"),
        _csv.parse_date(row.get("close_date"), "close_date", optional=True),
        _csv.parse_date(row.get("reference_date"), "reference_date"),
    )


SCHEMAS = {
    DatasetKind.LOANS: (LoanRecord, _parse_loan, "loans.csv"),
    DatasetKind.HOLDINGS: (HoldingRecord, _parse_holding, "holdings.csv"),
    DatasetKind.SECURITIES: (SecurityRef, _parse_security, "securities.csv"),
    DatasetKind.SFT: (SftRecord, _parse_sft, "sft.csv"),
}


def columns(kind):
    return tuple(f.name for f in fields(SCHEMAS[DatasetKind(kind)][0]))


def file_name(kind):
    return SCHEMAS[DatasetKind(kind)][2]


@dataclass
class ValidationReport:
    kind: DatasetKind
    n_rows: int = 0
    n_parsed: int = 0
    errors: list = field(default_factory=list)  # (row_number, reason)

    @property
    def ok(self):
        return not self.errors


class StrictModeError(ValueError):
    def __init__(self, kind, row, reason):
        super().__init__(f"{file_name(kind)} row {row}: {reason}")
        self.row = row
        self.reason = reason


def load_records(kind, source, strict=False):
    """Parse one dataset file into typed records.

    Bad rows are collected in the report as ``(row_number, reason)`` unless
    ``strict`` is set, in which case the first one raises
    ``StrictModeError``.  A missing required column raises ``SchemaError``.
    """
    kind = DatasetKind(kind)
    _, parse, name = SCHEMAS[kind]
    report = ValidationReport(kind)
    records = []
    seen_isins = set()
    for row_no, row in _csv.read_rows(source, columns(kind), name):
        report.n_rows += 1
        try:
            rec = parse(row)
            if kind is DatasetKind.SECURITIES:
                if rec.isin in seen_isins:
                    raise RowError(f"duplicate isin {rec.isin}")
                seen_isins.add(rec.isin)
        except (RowError, ValueError) as exc:
            if strict:
                raise StrictModeError(kind, row_no, str(exc)) from None
            report.errors.append((row_no, str(exc)))
            continue
        records.append(rec)
    report.n_parsed = len(records)
    return records, report


def write_records(kind, records, stream):
    """Write records back out in the dataset's CSV schema."""
    cols = columns(kind)
    _csv.write_rows(stream, cols, ([getattr(r, c) for c in cols] for r in records))


def snapshot_filter(records, as_of):
    """Transactions active at ``as_of``: opened on or before it, not yet closed."""
    return [r for r in records
            if r.open_date <= as_of and (r.close_date is None or r.close_date > as_of)]


def is_month_end(day):
    return day.day == calendar.monthrange(day.year, day.month)[1]
