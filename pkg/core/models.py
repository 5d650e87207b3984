# Copyright © 2025 SRF Development, Inc. All rights reserved.
# SPDX-License-Identifier: MIT

"""Domain records shared by the analysis modules."""

import datetime as dt
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Literal, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from core.exceptions import CalendarMismatch, DuplicateDate, InvalidInput, NonPositivePrice, ShapeMismatch


class PanelKind(str, Enum):
    PRICE = "price"
    RETURN = "return"
    POLARITY = "polarity"
    NORMALIZED = "normalized"


@dataclass(frozen=True)
class PriceSeries:
    """Daily closes of one index, S_k(t)."""

    ticker: str
    country: str
    closes: pd.Series

    def __post_init__(self):
        closes = self.closes.astype(float)
        closes.index = pd.DatetimeIndex(closes.index)
        if closes.index.has_duplicates:
            dupes = closes.index[closes.index.duplicated()].strftime("%Y-%m-%d").tolist()
            raise DuplicateDate(f"{self.ticker}: duplicate dates {dupes}")
        if not closes.index.is_monotonic_increasing:
            closes = closes.sort_index()
        if (closes <= 0).any():
            bad = closes[closes <= 0].index[0].strftime("%Y-%m-%d")
            raise NonPositivePrice(f"{self.ticker}: non-positive close on {bad}")
        closes.name = self.ticker
        object.__setattr__(self, "closes", closes)

    def __len__(self) -> int:
        return len(self.closes)


class NewsDocument(BaseModel):
    """One article returned for a country keyword."""

    model_config = ConfigDict(frozen=True)

    keyword: str = Field(..., min_length=1, description="Country search term.")
    date: dt.date = Field(..., description="Publication date (UTC).")
    body: str = Field(..., description="Raw article text.")

    @field_validator("body")
    @classmethod
    def body_not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("body is empty after whitespace trim")
        return value


class AlignmentPolicy(BaseModel):
    """How several series are put on one trading calendar."""

    calendar: Literal["intersection", "union"] = "intersection"
    ffill_limit: int = Field(default=3, ge=0, description="Max consecutive days forward-filled.")
    max_missing: float = Field(default=0.10, ge=0.0, le=1.0, description="Drop series missing more than this fraction.")


class TEConfig(BaseModel):
    """Parameters of the kernel transfer entropy estimator."""

    k: int = Field(default=1, ge=1, description="History length of the destination X.")
    l: int = Field(default=1, ge=1, description="History length of the source Y.")
    h: float = Field(default=0.36, gt=0.0, description="Box kernel radius (used when bandwidth_mode is 'fixed').")
    bandwidth_mode: Literal["fixed", "silverman"] = "silverman"
    box: Literal["half", "full"] = Field(default="half", description="'half': |d| < h, 'full': |d| < h/2.")
    log_base: Literal["2", "e"] = "2"
    M: int = Field(default=1000, ge=0, description="Number of shuffled surrogates.")
    seed: int = 0
    theiler: int = Field(default=0, ge=0, description="Temporal exclusion window, 0 disables it.")

    @field_validator("log_base", mode="before")
    @classmethod
    def coerce_log_base(cls, value):
        return str(value)


@dataclass(frozen=True)
class AlignedPanel:
    """N labelled series on a shared calendar, stored as an N x T matrix."""

    labels: tuple
    calendar: pd.DatetimeIndex
    values: np.ndarray
    kind: PanelKind

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        labels = tuple(self.labels)
        calendar = pd.DatetimeIndex(self.calendar)
        if values.ndim != 2:
            raise ShapeMismatch(f"panel values must be 2-D, got shape {values.shape}")
        if values.shape[0] != len(labels):
            raise ShapeMismatch(f"{values.shape[0]} rows for {len(labels)} labels")
        if values.shape[1] != len(calendar):
            raise ShapeMismatch(f"{values.shape[1]} columns for a calendar of {len(calendar)} dates")
        if not np.isfinite(values).all():
            raise InvalidInput("panel contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "calendar", calendar)
        object.__setattr__(self, "kind", PanelKind(self.kind))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def t(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, kind: Union[PanelKind, str]) -> "AlignedPanel":
        """Build from a frame indexed by date with one column per label."""
        return cls(tuple(frame.columns), frame.index, frame.to_numpy(dtype=float).T, kind)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values.T, index=self.calendar, columns=list(self.labels))
        frame.index.name = "date"
        return frame

    def row(self, label: str) -> np.ndarray:
        return self.values[self.labels.index(label)]

    def replace(self, values: np.ndarray, kind: Union[PanelKind, str, None] = None,
                calendar: Optional[Iterable] = None) -> "AlignedPanel":
        return AlignedPanel(
            self.labels,
            self.calendar if calendar is None else calendar,
            values,
            self.kind if kind is None else kind,
        )

    def select(self, labels: Sequence[str]) -> "AlignedPanel":
        idx = [self.labels.index(label) for label in labels]
        return AlignedPanel(tuple(labels), self.calendar, self.values[idx], self.kind)

    def window(self, start: int, length: int) -> "AlignedPanel":
        return AlignedPanel(
            self.labels, self.calendar[start:start + length], self.values[:, start:start + length], self.kind
        )

    def restrict(self, calendar: pd.DatetimeIndex) -> "AlignedPanel":
        """Keep exactly the given dates, which must all be present."""
        calendar = pd.DatetimeIndex(calendar)
        missing = calendar.difference(self.calendar)
        if len(missing):
            raise CalendarMismatch(f"{len(missing)} dates absent from the panel, first {missing[0].date()}")
        positions = self.calendar.get_indexer(calendar)
        return AlignedPanel(self.labels, calendar, self.values[:, positions], self.kind)

    def relabel(self, labels: Sequence[str]) -> "AlignedPanel":
        return AlignedPanel(tuple(labels), self.calendar, self.values, self.kind)


def stack_panels(top: AlignedPanel, bottom: AlignedPanel) -> AlignedPanel:
    """Stack two panels on the same calendar, `top` rows first."""
    if not top.calendar.equals(bottom.calendar):
        raise CalendarMismatch("stacked panels must share a calendar")
    return AlignedPanel(
        top.labels + bottom.labels, top.calendar, np.vstack([top.values, bottom.values]), top.kind
    )


@dataclass(frozen=True)
class PanelPair:
    """Returns and polarities of the same countries, row-aligned."""

    returns: AlignedPanel
    polarity: AlignedPanel
    countries: tuple

    def __post_init__(self):
        if self.returns.n != self.polarity.n or self.returns.n != len(self.countries):
            raise ShapeMismatch("returns and polarity panels must cover the same countries")
        if not self.returns.calendar.equals(self.polarity.calendar):
            raise CalendarMismatch("returns and polarity panels must share a calendar")
