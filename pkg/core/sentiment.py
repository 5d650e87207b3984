# Copyright © 2025 SRF Development, Inc. All rights reserved.
# SPDX-License-Identifier: MIT

"""
Lexicon scoring of news text into daily polarity series P_k(t).

A document's polarity is the mean lexicon score of its tokens that appear in
the lexicon. A day's polarity is the unweighted mean over that day's
documents (or, with aggregation='pooled', the mean over all the day's tokens).
"""

import csv
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Dict, Iterable, List, Literal, Mapping, Sequence, Union

import pandas as pd
from joblib import Parallel, delayed
from nltk.tokenize import RegexpTokenizer

from core import constants
from core.exceptions import EmptyCalendar, InvalidInput, NoLexiconHit, ParseError
from core.models import AlignedPanel, NewsDocument, PanelKind

logger = logging.getLogger(__name__)

# Maximal runs of letters/digits; underscores and everything else split tokens.
_TOKENIZER = RegexpTokenizer(r"[^\W_]+")

Impute = Literal["zero", "carry_forward"]
Aggregation = Literal["document", "pooled"]
OffCalendar = Literal["drop", "next"]


@dataclass(frozen=True)
class Lexicon:
    """Token → valence score in [-4, 4]."""

    entries: Mapping[str, float]

    def __post_init__(self):
        clean: Dict[str, float] = {}
        for token, score in self.entries.items():
            if not token or token != token.lower() or any(ch.isspace() for ch in token):
                raise InvalidInput(f"Lexicon token {token!r} must be lowercase without whitespace")
            score = float(score)
            if not -constants.LEXICON_SCORE_BOUND <= score <= constants.LEXICON_SCORE_BOUND:
                raise InvalidInput(f"Lexicon score for {token!r} is outside [-4, 4]: {score}")
            clean[token] = score
        object.__setattr__(self, "entries", MappingProxyType(clean))

    def __reduce__(self):
        # mapping proxies do not pickle; worker processes get a plain dict
        return (Lexicon, (dict(self.entries),))

    @classmethod
    def from_tsv(cls, path: Union[str, Path]) -> "Lexicon":
        """Reads `token<TAB>score` lines; '#' starts a comment line."""
        try:
            frame = pd.read_csv(
                path, sep="\t", header=None, names=["token", "score"], comment="#",
                quoting=csv.QUOTE_NONE, dtype={"token": str}, keep_default_na=False,
            )
        except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as e:
            raise ParseError(f"unreadable lexicon: {e}", path=str(path)) from e
        scores = pd.to_numeric(frame["score"], errors="coerce")
        if scores.isna().any():
            bad = frame[scores.isna()].iloc[0]
            raise ParseError(f"non-numeric score for token {bad['token']!r}", path=str(path))
        return cls(dict(zip(frame["token"].str.strip(), scores)))

    def scaled(self, factor: float) -> "Lexicon":
        return Lexicon({token: factor * score for token, score in self.entries.items()})

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, token: str) -> bool:
        return token in self.entries


def clean_text(raw: str) -> List[str]:
    """Lowercased alphanumeric runs; punctuation and symbols are dropped."""
    if not raw:
        return []
    return [token.lower() for token in _TOKENIZER.tokenize(raw)]


def score_text(tokens: Iterable[str], lexicon: Lexicon) -> float:
    """Mean lexicon score over the tokens found in the lexicon."""
    if not len(lexicon):
        raise InvalidInput("lexicon is empty")
    hits = [lexicon.entries[token] for token in tokens if token in lexicon.entries]
    if not hits:
        raise NoLexiconHit("no token matched the lexicon")
    # fsum is exactly rounded, so the result does not depend on token order
    mean = math.fsum(hits) / len(hits)
    return min(max(mean, min(hits)), max(hits))


@dataclass(frozen=True)
class PolaritySeries:
    """Daily polarity of one keyword. `frame` is indexed by date."""

    keyword: str
    frame: pd.DataFrame  # columns: polarity, doc_count, no_hit_count, imputed

    @property
    def polarity(self) -> pd.Series:
        return self.frame["polarity"].rename(self.keyword)

    def __len__(self) -> int:
        return len(self.frame)

    def to_csv(self, path: Union[str, Path]) -> None:
        out = self.frame.reset_index()
        out.insert(0, "keyword", self.keyword)
        out["date"] = out["date"].dt.strftime("%Y-%m-%d")
        out[["keyword", "date", "polarity", "doc_count", "imputed"]].to_csv(path, index=False)


def _snap_dates(dates: Sequence, calendar: pd.DatetimeIndex, off_calendar: OffCalendar) -> pd.Series:
    """Maps document dates onto calendar dates; NaT where a document is dropped."""
    stamps = pd.DatetimeIndex(pd.to_datetime(list(dates)))
    if off_calendar == "drop":
        mapped = stamps.where(stamps.isin(calendar))
    else:
        positions = calendar.searchsorted(stamps, side="left")
        mapped = pd.DatetimeIndex(
            [calendar[p] if p < len(calendar) else pd.NaT for p in positions]
        )
    return pd.Series(mapped)


def daily_polarity(
    docs: Iterable[NewsDocument],
    keyword: str,
    calendar: Sequence,
    lexicon: Lexicon,
    impute: Impute = "zero",
    aggregation: Aggregation = "document",
    off_calendar: OffCalendar = "drop",
) -> PolaritySeries:
    """
    Polarity of `keyword` on every calendar date.

    Dates without a scoreable document get 0.0 (impute='zero') or the previous
    day's value (impute='carry_forward') and are flagged as imputed.
    """
    calendar = pd.DatetimeIndex(calendar)
    if len(calendar) == 0:
        raise EmptyCalendar("daily_polarity needs a non-empty calendar")

    own = [doc for doc in docs if doc.keyword == keyword]
    mapped = _snap_dates([doc.date for doc in own], calendar, off_calendar) if own else pd.Series([], dtype="datetime64[ns]")
    by_day: Dict[pd.Timestamp, List[NewsDocument]] = defaultdict(list)
    off = 0
    for doc, day in zip(own, mapped):
        if pd.isna(day):
            off += 1
            continue
        by_day[day].append(doc)
    if off:
        logger.debug(f"'{keyword}': {off} documents fall outside the calendar and were dropped.")

    rows = []
    previous = 0.0
    for day in calendar:
        day_docs = by_day.get(day, [])
        no_hit = 0
        if aggregation == "pooled":
            tokens: List[str] = []
            scored = 0
            for doc in day_docs:
                doc_tokens = clean_text(doc.body)
                if any(token in lexicon for token in doc_tokens):
                    tokens.extend(doc_tokens)
                    scored += 1
                else:
                    no_hit += 1
            value = score_text(tokens, lexicon) if tokens else None
        else:
            scores: List[float] = []
            for doc in day_docs:
                try:
                    scores.append(score_text(clean_text(doc.body), lexicon))
                except NoLexiconHit:
                    no_hit += 1
            scored = len(scores)
            value = math.fsum(scores) / scored if scores else None

        if value is None:
            value = previous if impute == "carry_forward" else 0.0
            imputed = True
        else:
            imputed = False
        previous = value
        rows.append((day, value, scored, no_hit, imputed))

    frame = pd.DataFrame(rows, columns=["date", "polarity", "doc_count", "no_hit_count", "imputed"]).set_index("date")
    skipped = int(frame["no_hit_count"].sum())
    if skipped:
        logger.debug(f"'{keyword}': {skipped} documents had no lexicon hit.")
    return PolaritySeries(keyword=keyword, frame=frame)


def polarity_series(
    docs: Sequence[NewsDocument],
    keywords: Sequence[str],
    calendar: Sequence,
    lexicon: Lexicon,
    impute: Impute = "zero",
    aggregation: Aggregation = "document",
    off_calendar: OffCalendar = "drop",
    n_jobs: int = 1,
) -> Dict[str, PolaritySeries]:
    """`daily_polarity` for several keywords; output order follows `keywords`."""
    grouped: Dict[str, List[NewsDocument]] = defaultdict(list)
    for doc in docs:
        grouped[doc.keyword].append(doc)
    results = Parallel(n_jobs=n_jobs)(
        delayed(daily_polarity)(grouped.get(keyword, []), keyword, calendar, lexicon, impute, aggregation, off_calendar)
        for keyword in keywords
    )
    for series in results:
        flagged = int(series.frame["imputed"].sum())
        if flagged:
            logger.info(f"'{series.keyword}': {flagged}/{len(series)} days imputed.")
    return dict(zip(keywords, results))


def polarity_panel(series: Mapping[str, PolaritySeries]) -> AlignedPanel:
    """Stacks polarity series (already on one calendar) into a panel."""
    frame = pd.concat({keyword: s.polarity for keyword, s in series.items()}, axis=1)
    return AlignedPanel.from_frame(frame, PanelKind.POLARITY)
