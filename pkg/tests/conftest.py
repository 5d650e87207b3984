import datetime as dt
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from core.models import AlignedPanel, NewsDocument, PanelKind
from core.sentiment import Lexicon
from scripts.generate_fixture import PROJECT_ROOT, write_fixture


@pytest.fixture
def lexicon() -> Lexicon:
    return Lexicon({"good": 2.0, "great": 3.0, "bad": -2.0, "crisis": -3.0, "up": 2.0, "down": -3.0})


@pytest.fixture
def calendar() -> pd.DatetimeIndex:
    return pd.bdate_range("2016-03-01", periods=5)


@pytest.fixture
def make_panel():
    def factory(values, kind=PanelKind.RETURN, labels=None, start="2016-01-04") -> AlignedPanel:
        values = np.asarray(values, dtype=float)
        labels = labels or [f"S{i}" for i in range(values.shape[0])]
        return AlignedPanel(tuple(labels), pd.bdate_range(start, periods=values.shape[1]), values, kind)
    return factory


@pytest.fixture
def doc():
    def factory(keyword: str, date: str, body: str) -> NewsDocument:
        return NewsDocument(keyword=keyword, date=dt.date.fromisoformat(date), body=body)
    return factory


@pytest.fixture
def write_file(tmp_path: Path):
    def factory(name: str, content: str) -> Path:
        path = tmp_path / name
        path.write_text(content, encoding="utf-8")
        return path
    return factory


@pytest.fixture(scope="session")
def fixture_config(tmp_path_factory) -> Path:
    """The shipped synthetic fixture: 10 countries, 218 trading days, M=100."""
    return write_fixture(tmp_path_factory.mktemp("fixture"), n_countries=10, n_days=218, seed=0)


@pytest.fixture(scope="session")
def universe_path() -> Path:
    return PROJECT_ROOT / "universe" / "countries.toml"
