"""Shared CSV plumbing: header checks, typed field parsers, path/stream input."""
from __future__ import annotations

import csv
import datetime as dt
import io
import os
from decimal import Decimal, InvalidOperation

CENT = Decimal("0.01")


class SchemaError(ValueError):
    """Whole-file rejection: the header does not match the expected schema."""

    def __init__(self, name, missing):
        super().__init__(f"{name}: missing required column(s) {', '.join(missing)}")
        self.name = name
        self.missing = list(missing)


class RowError(ValueError):
    pass


def open_text(source):
    """Accept a path, a text stream or a binary stream; return a text stream."""
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8")
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8"), newline="")
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def read_rows(source, columns, name):
    """Yield ``(row_number, dict)``; row numbers count data rows from 1."""
    stream = open_text(source)
    close = isinstance(source, (str, os.PathLike))
    try:
        reader = csv.DictReader(stream)
        header = reader.fieldnames or []
        missing = [c for c in columns if c not in header]
        if missing:
            raise SchemaError(name, missing)
        for i, row in enumerate(reader, start=1):
            yield i, row
    finally:
        if close:
            stream.close()


def required(row, key):
    value = (row.get(key) or "").strip()
    if not value:
        raise RowError(f"missing {key}")
    return value


def parse_amount(text, key, positive=True, optional=False):
    text = (text or "").strip()
    if not text:
        if optional:
            return None
        raise RowError(f"missing {key}")
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise RowError(f"malformed amount in {key}: {text!r}") from None
    if not value.is_finite():
        raise RowError(f"non-finite amount in {key}")
    if value.as_tuple().exponent < -2:
        raise RowError(f"more than two fractional digits in {key}: {text!r}")
    if positive and value <= 0:
        raise RowError(f"non-positive amount in {key}")
    if not positive and value < 0:
        raise RowError(f"negative amount in {key}")
    return value.quantize(CENT)


def parse_date(text, key, optional=False):
    text = (text or "").strip()
    if not text:
        if optional:
            return None
        raise RowError(f"missing {key}")
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise RowError(f"malformed ISO date in {key}: {text!r}") from None


def parse_fraction(text, key):
    text = (text or "").strip()
    try:
        value = float(text)
    except ValueError:
        raise RowError(f"malformed number in {key}: {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise RowError(f"{key} outside [0, 1]: {text}")
    return value


def parse_bool(text, key):
    text = (text or "").strip().lower()
    if text in ("1", "true", "t", "yes", "y"):
        return True
    if text in ("0", "false", "f", "no", "n"):
        return False
    raise RowError(f"malformed boolean in {key}: {text!r}")


def fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, dt.date):
        return value.isoformat()
    if hasattr(value, "value") and not isinstance(value, (int, float, Decimal)):
        return value.value
    return str(value)


def write_rows(stream, columns, rows):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
