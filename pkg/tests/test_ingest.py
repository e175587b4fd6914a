import datetime as dt
import io
from decimal import Decimal

import pytest
from hypothesis import given, strategies as st

from netstrata.ingest import (DatasetKind, InstrumentType, LoanRecord, SchemaError, SftKind,
                              SftRecord, StrictModeError, add_months, columns, load_records,
                              months_between, snapshot_filter, write_records)

D = dt.date


def csv_text(kind, *rows):
    return (",".join(columns(kind)) + "\n" + "".join(r + "\n" for r in rows)).encode()


def test_loan_row_parses():
    recs, rep = load_records("loans", csv_text("loans",
                                               "A,B,deposit,1000000,2020-01-01,2022-01-01,2021-06-30"))
    assert rep.ok and rep.n_parsed == 1
    loan = recs[0]
    assert loan.instrument_type is InstrumentType.DEPOSIT
    assert loan.outstanding_nominal == Decimal("1000000")
    # 24 months from origination, 6 months left at the reference date
    assert loan.initial_maturity_months == 24
    assert loan.residual_maturity_months == 6


def test_negative_amount_is_row_error():
    recs, rep = load_records("loans", csv_text("loans", "A,B,deposit,-5,2020-01-01,,2021-06-30"))
    assert recs == []
    assert rep.errors == [(1, "non-positive amount in outstanding_nominal")]


def test_unknown_isin_accepted_at_parse_time():
    recs, rep = load_records("holdings", csv_text("holdings", "A,XS0000000009,10.00,2021-06-30"))
    assert rep.ok and recs[0].isin == "XS0000000009"


def test_missing_column_rejects_file():
    with pytest.raises(SchemaError):
        load_records("holdings", b"holder_id,isin,reference_date\nA,XS0000000009,2021-06-30\n")


def test_bad_rows_collected_not_fatal():
    data = csv_text("sft",
                    "A,B,repo,10,2021-06-01,,2021-06-30",
                    "A,B,repo,abc,2021-06-01,,2021-06-30",
                    "A,B,swap,10,2021-06-01,,2021-06-30",
                    "A,B,repo,10,2021-13-01,,2021-06-30",
                    "A,B,repo,10,2021-06-10,2021-06-01,2021-06-30")
    recs, rep = load_records("sft", data)
    assert len(recs) == 1
    assert [r for r, _ in rep.errors] == [2, 3, 4, 5]
    assert rep.n_parsed + len(rep.errors) == rep.n_rows == 5


def test_strict_mode_raises_on_first_bad_row():
    data = csv_text("loans", "A,B,deposit,0,2020-01-01,,2021-06-30")
    with pytest.raises(StrictModeError) as err:
        load_records("loans", data, strict=True)
    assert err.value.row == 1


def test_duplicate_isin_in_reference_set():
    data = csv_text("securities", "DE0000000001,A,debt", "DE0000000001,B,equity")
    recs, rep = load_records("securities", data)
    assert len(recs) == 1 and "duplicate" in rep.errors[0][1]


def test_isin_format_checked():
    _, rep = load_records("securities", csv_text("securities", "bad,A,debt"))
    assert not rep.ok


def sft(open_, close=None, kind=SftKind.REPO):
    return SftRecord("A", "B", kind, Decimal(1), open_, close, D(2021, 6, 30))


def test_snapshot_filter_examples():
    as_of = D(2021, 6, 30)
    assert snapshot_filter([sft(D(2021, 6, 10), D(2021, 6, 20))], as_of) == []
    assert len(snapshot_filter([sft(D(2021, 6, 10))], as_of)) == 1
    assert snapshot_filter([sft(D(2021, 7, 1))], as_of) == []
    # closing on the snapshot day means no longer open at the snapshot
    assert snapshot_filter([sft(D(2021, 6, 1), as_of)], as_of) == []


def test_month_arithmetic():
    assert add_months(D(2021, 1, 31), 1) == D(2021, 2, 28)
    assert months_between(D(2021, 1, 31), D(2021, 2, 28)) == 1
    assert months_between(D(2021, 1, 15), D(2021, 4, 14)) == 2
    assert months_between(D(2021, 1, 15), D(2021, 4, 15)) == 3


# --- properties -----------------------------------------------------------

dates = st.dates(D(2015, 1, 1), D(2025, 12, 31))
amounts = st.decimals(min_value=Decimal("0.01"), max_value=Decimal("1e12"), places=2)
ids = st.sampled_from(["A", "B", "C", "B001-0001"])


@st.composite
def loans(draw):
    orig = draw(dates)
    mat = draw(st.one_of(st.none(), st.dates(orig, D(2030, 1, 1))))
    return LoanRecord(draw(ids), draw(ids), draw(st.sampled_from(list(InstrumentType))),
                      draw(amounts), orig, mat, draw(dates))


@st.composite
def sfts(draw):
    open_ = draw(dates)
    close = draw(st.one_of(st.none(), st.dates(open_, D(2030, 1, 1))))
    return SftRecord(draw(ids), draw(ids), draw(st.sampled_from(list(SftKind))),
                     draw(amounts), open_, close, draw(dates))


@given(st.lists(loans(), max_size=20))
def test_loan_round_trip(records):
    buf = io.StringIO()
    write_records(DatasetKind.LOANS, records, buf)
    back, rep = load_records(DatasetKind.LOANS, buf.getvalue().encode())
    assert rep.ok and back == records


@given(st.lists(sfts(), max_size=20))
def test_sft_round_trip(records):
    buf = io.StringIO()
    write_records(DatasetKind.SFT, records, buf)
    back, rep = load_records(DatasetKind.SFT, buf.getvalue().encode())
    assert rep.ok and back == records


@given(st.lists(sfts(), max_size=30), dates)
def test_snapshot_subset_and_idempotent(records, as_of):
    once = snapshot_filter(records, as_of)
    assert all(r in records for r in once)
    assert snapshot_filter(once, as_of) == once


@given(st.lists(st.tuples(amounts, st.booleans()), max_size=25))
def test_row_accounting(rows):
    lines = [f"A,B,deposit,{'-' if bad else ''}{a},2020-01-01,,2021-06-30" for a, bad in rows]
    recs, rep = load_records("loans", csv_text("loans", *lines))
    assert rep.n_rows == len(rows)
    assert rep.n_parsed + len(rep.errors) == rep.n_rows
    assert rep.n_parsed == sum(1 for _, bad in rows if not bad)
