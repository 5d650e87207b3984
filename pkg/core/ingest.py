# Copyright © 2025 SRF Development, Inc. All rights reserved.
# SPDX-License-Identifier: MIT

"""
Loading and calendar alignment of index closes and news records.

Price files are UTF-8 CSV (`date,ticker,close`, ISO dates) or the equivalent
wide layout (`date,<ticker>,<ticker>,...`). News files are newline-delimited
JSON records `{keyword, date, body}`.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Collection, Dict, Iterable, Iterator, List, Mapping, Optional, Union

import pandas as pd
from pydantic import ValidationError

from core.exceptions import (
    AllSeriesDropped,
    DuplicateDate,
    EmptyCalendar,
    InvalidInput,
    NonPositivePrice,
    ParseError,
    UnknownKeyword,
)
from core.models import AlignedPanel, AlignmentPolicy, NewsDocument, PanelKind, PriceSeries

logger = logging.getLogger(__name__)

PRICE_FORMATS = ("long", "wide")


def _resolve_path(path: Union[str, Path]) -> Path:
    resolved = Path(path).expanduser()
    if not resolved.exists():
        raise FileNotFoundError(f"Missing file: {resolved}")
    return resolved


def _utc_date(value) -> "pd.Timestamp":
    stamp = pd.Timestamp(value)
    if stamp.tzinfo is not None:
        stamp = stamp.tz_convert("UTC").tz_localize(None)
    return stamp.normalize()


# --- Prices ---

def load_prices(path: Union[str, Path], format: str = "long", universe=None) -> Dict[str, PriceSeries]:
    """
    Reads closing prices into one PriceSeries per ticker, sorted by date.

    Args:
        path: CSV file.
        format: 'long' (date,ticker,close rows) or 'wide' (one column per ticker).
        universe: optional UniverseManager used to attach country names.
    """
    if format not in PRICE_FORMATS:
        raise InvalidInput(f"Unknown price format '{format}', expected one of {PRICE_FORMATS}")
    file_path = _resolve_path(path)
    try:
        frame = pd.read_csv(file_path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(str(e), path=str(file_path)) from e

    # Line numbers refer to the file, header is line 1
    frame["line"] = frame.index + 2
    if format == "wide":
        if "date" not in frame.columns:
            raise ParseError("missing 'date' column", line=1, path=str(file_path))
        frame = frame.melt(id_vars=["date", "line"], var_name="ticker", value_name="close")
        frame = frame[frame["close"].str.strip() != ""]

    missing = {"date", "ticker", "close"} - set(frame.columns)
    if missing:
        raise ParseError(f"missing columns {sorted(missing)}", line=1, path=str(file_path))

    frame["ticker"] = frame["ticker"].str.strip()
    dates = pd.to_datetime(frame["date"].str.strip(), format="%Y-%m-%d", errors="coerce")
    closes = pd.to_numeric(frame["close"], errors="coerce")
    malformed = dates.isna() | closes.isna() | (frame["ticker"] == "")
    if malformed.any():
        row = frame[malformed].sort_values("line").iloc[0]
        raise ParseError(
            f"malformed row (date={row['date']!r}, ticker={row['ticker']!r}, close={row['close']!r})",
            line=int(row["line"]), path=str(file_path),
        )

    frame = frame.assign(date=dates, close=closes)
    non_positive = frame[frame["close"] <= 0]
    if len(non_positive):
        row = non_positive.sort_values("line").iloc[0]
        raise NonPositivePrice(f"line {row['line']}: {row['ticker']} close {row['close']} on {row['date'].date()}")

    duplicated = frame[frame.duplicated(["ticker", "date"], keep="first")]
    if len(duplicated):
        row = duplicated.sort_values("line").iloc[0]
        raise DuplicateDate(f"line {row['line']}: {row['ticker']} repeats {row['date'].date()}")

    series: Dict[str, PriceSeries] = {}
    for ticker, group in frame.groupby("ticker", sort=False):
        closes_by_date = group.set_index("date")["close"].sort_index()
        registered = universe.by_ticker(ticker) if universe is not None else None
        country = registered.name if registered else ticker
        series[ticker] = PriceSeries(ticker=ticker, country=country, closes=closes_by_date)

    logger.info(f"Loaded {len(series)} price series from {file_path}.")
    return series


# --- News ---

@dataclass
class NewsBatch:
    """Documents read from a news file, with counts of the records left out."""

    documents: List[NewsDocument] = field(default_factory=list)
    skipped_empty: int = 0
    skipped_unknown: int = 0

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[NewsDocument]:
        return iter(self.documents)


def load_news(path: Union[str, Path], keywords: Optional[Collection[str]] = None, strict: bool = False) -> NewsBatch:
    """
    Reads an NDJSON news file. Bodies are returned untouched.

    Records with an empty body are skipped. Records whose keyword is not in
    `keywords` are skipped with a warning, or raise UnknownKeyword when `strict`.
    """
    file_path = _resolve_path(path)
    allowed = set(keywords) if keywords is not None else None
    batch = NewsBatch()
    unknown_seen = set()

    with open(file_path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON ({e.msg})", line=line_no, path=str(file_path)) from e
            if not isinstance(record, dict) or "keyword" not in record or "date" not in record:
                raise ParseError("record needs 'keyword' and 'date' fields", line=line_no, path=str(file_path))

            body = record.get("body") or ""
            if not str(body).strip():
                batch.skipped_empty += 1
                continue

            keyword = str(record["keyword"])
            if allowed is not None and keyword not in allowed:
                if strict:
                    raise UnknownKeyword(f"line {line_no}: keyword '{keyword}' is not configured")
                unknown_seen.add(keyword)
                batch.skipped_unknown += 1
                continue

            try:
                doc = NewsDocument(keyword=keyword, date=_utc_date(record["date"]).date(), body=str(body))
            except (ValidationError, ValueError) as e:
                raise ParseError(f"invalid record: {e}", line=line_no, path=str(file_path)) from e
            batch.documents.append(doc)

    if batch.skipped_empty:
        logger.warning(f"Skipped {batch.skipped_empty} news records with an empty body in {file_path}.")
    if unknown_seen:
        logger.warning(
            f"Skipped {batch.skipped_unknown} news records with unknown keywords {sorted(unknown_seen)}."
        )
    logger.info(f"Loaded {len(batch)} news documents from {file_path}.")
    return batch


def write_news(documents: Iterable[NewsDocument], path: Union[str, Path], append: bool = False) -> int:
    """Writes documents in the NDJSON layout `load_news` reads. Returns the record count."""
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(file_path, "a" if append else "w", encoding="utf-8") as f:
        for doc in documents:
            f.write(json.dumps({"keyword": doc.keyword, "date": doc.date.isoformat(), "body": doc.body},
                               ensure_ascii=False) + "\n")
            count += 1
    return count


# --- Alignment ---

def price_frame(series: Mapping[str, PriceSeries]) -> Dict[str, pd.Series]:
    return {ticker: s.closes for ticker, s in series.items()}


def align_panel(
    series: Union[Mapping[str, pd.Series], AlignedPanel],
    policy: Optional[AlignmentPolicy] = None,
    kind: Union[PanelKind, str, None] = None,
) -> AlignedPanel:
    """
    Puts labelled (date, value) series on one calendar.

    Missing fractions are measured against the union of all dates; series above
    `policy.max_missing` are dropped. The calendar is then the intersection of
    the survivors' dates, or their union with gaps forward-filled up to
    `policy.ffill_limit` days. Dates still holding a gap are removed.
    """
    policy = policy or AlignmentPolicy()
    if isinstance(series, AlignedPanel):
        kind = kind or series.kind
        series = {label: s for label, s in series.to_frame().items()}
    kind = kind or PanelKind.PRICE
    if not series:
        raise InvalidInput("align_panel needs at least one series")

    frame = pd.concat({label: s.astype(float) for label, s in series.items()}, axis=1).sort_index()
    frame.index = pd.DatetimeIndex(frame.index)
    if frame.empty:
        raise EmptyCalendar("no dates in any series")

    missing = frame.isna().mean()
    dropped = missing[missing > policy.max_missing]
    if len(dropped):
        logger.warning(
            "Dropping series above the missing threshold "
            f"({policy.max_missing:.0%}): "
            + ", ".join(f"{label} ({frac:.1%})" for label, frac in dropped.items())
        )
        frame = frame.drop(columns=dropped.index)
    if frame.shape[1] == 0:
        raise AllSeriesDropped(f"all {len(series)} series exceed the missing threshold")

    if policy.calendar == "union":
        frame = frame.ffill(limit=policy.ffill_limit)
    frame = frame.dropna(how="any")
    if frame.empty:
        raise EmptyCalendar("aligned calendar is empty")

    return AlignedPanel.from_frame(frame, kind)


# --- Remote fetch ---

def fetch_articles(
    keyword: str,
    date_range: tuple,
    credentials: str,
    endpoint: Optional[str] = None,
    out_path: Union[str, Path, None] = None,
    provider=None,
    max_pages: int = 100,
) -> List[NewsDocument]:
    """
    Downloads articles for one keyword and appends them to `out_path` in the
    NDJSON layout read by `load_news`. Never needed by the analysis stages.
    """
    if provider is None:
        from core.nyt_service import NytArticleService

        kwargs = {"endpoint": endpoint} if endpoint else {}
        provider = NytArticleService(api_key=credentials, **kwargs)
    begin, end = date_range
    documents = provider.fetch(keyword, begin, end, max_pages=max_pages)
    if out_path is not None and documents:
        write_news(documents, out_path, append=True)
    return documents
