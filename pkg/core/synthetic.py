# Copyright © 2025 SRF Development, Inc. All rights reserved.
# SPDX-License-Identifier: MIT

"""
Seeded synthetic data with known structure: factor-model panels for the
spectral checks and a small news-driven market used as the shipped fixture.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from faker import Faker

from core.ingest import write_news
from core.models import AlignedPanel, NewsDocument, PanelKind
from core.sentiment import Lexicon

logger = logging.getLogger(__name__)

FIXTURE_START = "2016-01-04"

# Neutral filler; none of these may appear in a lexicon used with the fixture.
FILLER_WORDS = [
    "market", "index", "officials", "said", "week", "report", "government", "trade",
    "minister", "shares", "analysts", "central", "bank", "policy", "economy", "session",
    "investors", "exchange", "budget", "currency", "today", "capital", "press", "sector",
]


def _calendar(t: int, start: str = FIXTURE_START) -> pd.DatetimeIndex:
    return pd.bdate_range(start, periods=t)


def factor_panel(loadings: Sequence[float], t: int, seed: int, labels: Optional[Sequence[str]] = None) -> AlignedPanel:
    """X_k(t) = b_k F(t) + sqrt(1 - b_k^2) e_k(t) with i.i.d. standard normal F and e."""
    loadings = np.asarray(loadings, dtype=float)
    rng = np.random.default_rng(seed)
    factor = rng.standard_normal(t)
    noise = rng.standard_normal((len(loadings), t))
    values = loadings[:, None] * factor[None, :] + np.sqrt(1.0 - loadings ** 2)[:, None] * noise
    labels = tuple(labels) if labels is not None else tuple(f"S{i:02d}" for i in range(len(loadings)))
    return AlignedPanel(labels, _calendar(t), values, PanelKind.RETURN)


def one_factor_panel(n: int, t: int, rho: float, seed: int) -> AlignedPanel:
    """Equicorrelated panel with pairwise correlation rho."""
    return factor_panel(np.full(n, np.sqrt(rho)), t, seed)


def gaussian_panel(n: int, t: int, seed: int) -> AlignedPanel:
    """Independent standard normal series."""
    return factor_panel(np.zeros(n), t, seed)


@dataclass
class SyntheticMarket:
    """Closes and news of a market whose returns follow the previous day's sentiment."""

    tickers: List[str]
    keywords: List[str]
    prices: pd.DataFrame  # long layout: date, ticker, close
    news: List[NewsDocument]

    def write(self, directory: Union[str, Path]) -> Dict[str, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {"prices": directory / "prices.csv", "news": directory / "news.ndjson"}
        self.prices.to_csv(paths["prices"], index=False, float_format="%.6f")
        write_news(self.news, paths["news"])
        logger.info(f"Wrote {len(self.prices)} price rows and {len(self.news)} news records to {directory}.")
        return paths


def _ar1(rng: np.random.Generator, shape, phi: float) -> np.ndarray:
    shocks = rng.standard_normal(shape)
    out = np.empty(shape)
    out[..., 0] = shocks[..., 0]
    scale = np.sqrt(1.0 - phi ** 2)
    for t in range(1, shape[-1]):
        out[..., t] = phi * out[..., t - 1] + scale * shocks[..., t]
    return out


def synthetic_market(
    tickers: Sequence[str],
    keywords: Sequence[str],
    lexicon: Lexicon,
    n_days: int = 218,
    seed: int = 0,
    docs_per_day: float = 2.5,
) -> SyntheticMarket:
    """
    A one-factor market in which the return of the move t -> t+1 also loads on
    the latent sentiment of day t-1. News on a trading day carries lexicon words
    whose sign follows the day's latent sentiment; occasional weekend stories
    fall off the trading calendar.
    """
    if len(tickers) != len(keywords):
        raise ValueError("tickers and keywords must pair up")
    positive = sorted(token for token, score in lexicon.entries.items() if score > 0)
    negative = sorted(token for token, score in lexicon.entries.items() if score < 0)
    if not positive or not negative:
        raise ValueError("the lexicon needs both positive and negative tokens")

    rng = np.random.default_rng(seed)
    fake = Faker()
    fake.seed_instance(seed)
    n = len(tickers)
    calendar = _calendar(n_days)

    # one leading day so that the first return has a previous sentiment
    common = _ar1(rng, (n_days + 1,), phi=0.7)
    own = _ar1(rng, (n, n_days + 1), phi=0.5)
    sentiment = 0.6 * common[None, :] + 0.8 * own
    market = rng.standard_normal(n_days - 1)
    idio = rng.standard_normal((n, n_days - 1))
    returns = 0.01 * (0.6 * market[None, :] + 0.6 * sentiment[:, :n_days - 1] + 0.5 * idio)

    closes = np.empty((n, n_days))
    closes[:, 0] = 1000.0 * (1.0 + np.arange(n))
    closes[:, 1:] = closes[:, :1] * np.cumprod(1.0 + returns, axis=1)
    prices = pd.DataFrame({
        "date": np.tile(calendar.strftime("%Y-%m-%d"), n),
        "ticker": np.repeat(list(tickers), n_days),
        "close": closes.ravel(),
    })

    def article(keyword: str, mood: float) -> str:
        p_positive = 1.0 / (1.0 + np.exp(-1.5 * mood))
        hits = int(rng.integers(2, 7))
        words = [
            positive[rng.integers(len(positive))] if rng.random() < p_positive else negative[rng.integers(len(negative))]
            for _ in range(hits)
        ]
        opening = fake.sentence(nb_words=8, ext_word_list=FILLER_WORDS)
        closing = fake.sentence(nb_words=6, ext_word_list=FILLER_WORDS)
        return f"{keyword}: {opening} {' '.join(words)}. {closing}"

    news: List[NewsDocument] = []
    for k, keyword in enumerate(keywords):
        for day_index, day in enumerate(calendar):
            mood = sentiment[k, day_index + 1]
            for _ in range(int(rng.poisson(docs_per_day))):
                news.append(NewsDocument(keyword=keyword, date=day.date(), body=article(keyword, mood)))
            if day.dayofweek == 4 and rng.random() < 0.2:
                saturday = (day + pd.Timedelta(days=1)).date()
                news.append(NewsDocument(keyword=keyword, date=saturday, body=article(keyword, rng.standard_normal())))

    return SyntheticMarket(list(tickers), list(keywords), prices, news)
