import json

import numpy as np
import pandas as pd
import pytest

from core.exceptions import (
    AllSeriesDropped,
    DuplicateDate,
    EmptyCalendar,
    NonPositivePrice,
    ParseError,
    UnknownKeyword,
)
from core.ingest import align_panel, load_news, load_prices, price_frame, write_news
from core.models import AlignmentPolicy, PanelKind
from universe.manager import UniverseManager


class TestLoadPrices:
    def test_single_ticker(self, write_file):
        path = write_file("prices.csv", "date,ticker,close\n2016-01-04,SPX,100\n2016-01-05,SPX,101\n2016-01-06,SPX,99\n")
        series = load_prices(path)
        assert list(series) == ["SPX"]
        assert series["SPX"].closes.tolist() == [100.0, 101.0, 99.0]

    def test_rows_are_sorted_by_date(self, write_file):
        path = write_file("prices.csv", "date,ticker,close\n2016-01-06,SPX,99\n2016-01-04,SPX,100\n2016-01-05,SPX,101\n")
        closes = load_prices(path)["SPX"].closes
        assert closes.index.is_monotonic_increasing
        assert closes.tolist() == [100.0, 101.0, 99.0]

    def test_zero_close(self, write_file):
        path = write_file("prices.csv", "date,ticker,close\n2016-01-04,SPX,100\n2016-01-05,SPX,0\n")
        with pytest.raises(NonPositivePrice):
            load_prices(path)

    def test_duplicate_date(self, write_file):
        path = write_file("prices.csv", "date,ticker,close\n2016-01-04,SPX,100\n2016-01-04,SPX,101\n")
        with pytest.raises(DuplicateDate):
            load_prices(path)

    def test_malformed_row_reports_line(self, write_file):
        path = write_file("prices.csv", "date,ticker,close\n2016-01-04,SPX,100\n2016-13-45,SPX,101\n")
        with pytest.raises(ParseError) as excinfo:
            load_prices(path)
        assert excinfo.value.line == 3

    def test_wide_layout(self, write_file):
        path = write_file("prices.csv", "date,SPX,UKX\n2016-01-04,100,50\n2016-01-05,101,\n2016-01-06,102,52\n")
        series = load_prices(path, format="wide")
        assert len(series["SPX"]) == 3
        assert len(series["UKX"]) == 2

    def test_country_from_universe(self, write_file, universe_path):
        path = write_file("prices.csv", "date,ticker,close\n2016-01-04,UKX,100\n")
        series = load_prices(path, universe=UniverseManager(str(universe_path)))
        assert series["UKX"].country == "United Kingdom"

    def test_unregistered_ticker_keeps_its_name(self, write_file, universe_path):
        path = write_file("prices.csv", "date,ticker,close\n2016-01-04,ZZZ,100\n")
        series = load_prices(path, universe=UniverseManager(str(universe_path)))
        assert series["ZZZ"].country == "ZZZ"

    def test_full_dimensions(self, tmp_path):
        dates = pd.bdate_range("2016-01-04", periods=217).strftime("%Y-%m-%d")
        rows = [(d, f"T{k:02d}", 100.0 + k) for k in range(40) for d in dates]
        path = tmp_path / "prices.csv"
        pd.DataFrame(rows, columns=["date", "ticker", "close"]).to_csv(path, index=False)
        series = load_prices(path)
        assert len(series) == 40
        assert all(len(s) == 217 for s in series.values())


class TestLoadNews:
    @staticmethod
    def _ndjson(records):
        return "".join(json.dumps(r) + "\n" for r in records)

    def test_two_records_one_date(self, write_file):
        path = write_file("news.ndjson", self._ndjson([
            {"keyword": "Mexico", "date": "2016-03-01", "body": "first"},
            {"keyword": "Mexico", "date": "2016-03-01", "body": "second"},
        ]))
        batch = load_news(path, keywords={"Mexico"})
        assert len(batch) == 2
        assert [d.body for d in batch] == ["first", "second"]

    def test_empty_body_skipped_and_counted(self, write_file, caplog):
        path = write_file("news.ndjson", self._ndjson([
            {"keyword": "Mexico", "date": "2016-03-01", "body": "   "},
            {"keyword": "Mexico", "date": "2016-03-01", "body": "kept"},
        ]))
        batch = load_news(path)
        assert len(batch) == 1
        assert batch.skipped_empty == 1
        assert "empty body" in caplog.text

    def test_unknown_keyword_warns(self, write_file):
        path = write_file("news.ndjson", self._ndjson([
            {"keyword": "Atlantis", "date": "2016-03-01", "body": "lost"},
            {"keyword": "Mexico", "date": "2016-03-01", "body": "kept"},
        ]))
        batch = load_news(path, keywords={"Mexico"})
        assert len(batch) == 1
        assert batch.skipped_unknown == 1

    def test_unknown_keyword_strict(self, write_file):
        path = write_file("news.ndjson", self._ndjson([{"keyword": "Atlantis", "date": "2016-03-01", "body": "x"}]))
        with pytest.raises(UnknownKeyword):
            load_news(path, keywords={"Mexico"}, strict=True)

    def test_invalid_json_line(self, write_file):
        path = write_file("news.ndjson", '{"keyword": "Mexico", "date": "2016-03-01", "body": "ok"}\n{broken\n')
        with pytest.raises(ParseError) as excinfo:
            load_news(path)
        assert excinfo.value.line == 2

    def test_dates_are_utc(self, write_file):
        path = write_file("news.ndjson", self._ndjson([
            {"keyword": "Mexico", "date": "2016-03-01T22:30:00-05:00", "body": "late"},
        ]))
        assert load_news(path).documents[0].date.isoformat() == "2016-03-02"

    def test_write_then_read(self, tmp_path, doc):
        docs = [doc("Mexico", "2016-03-01", "uno"), doc("Chile", "2016-03-02", "dos")]
        path = tmp_path / "news.ndjson"
        assert write_news(docs, path) == 2
        assert load_news(path).documents == docs


class TestAlignPanel:
    @staticmethod
    def _series(dates, values):
        return pd.Series(values, index=pd.to_datetime(dates), dtype=float)

    def test_identical_calendars(self):
        dates = ["2016-01-04", "2016-01-05", "2016-01-06"]
        panel = align_panel({"A": self._series(dates, [1, 2, 3]), "B": self._series(dates, [4, 5, 6])})
        assert panel.labels == ("A", "B")
        np.testing.assert_array_equal(panel.values, [[1, 2, 3], [4, 5, 6]])

    def test_forward_fill_interior_gap(self):
        dates = ["2016-01-04", "2016-01-05", "2016-01-06", "2016-01-07"]
        a = self._series(dates, [1, 2, 3, 4])
        b = self._series([dates[0], dates[2], dates[3]], [10, 30, 40])
        policy = AlignmentPolicy(calendar="union", ffill_limit=1, max_missing=0.5)
        panel = align_panel({"A": a, "B": b}, policy)
        assert panel.t == 4
        np.testing.assert_array_equal(panel.row("B"), [10, 10, 30, 40])

    def test_intersection_drops_gap_dates(self):
        dates = ["2016-01-04", "2016-01-05", "2016-01-06", "2016-01-07"]
        a = self._series(dates, [1, 2, 3, 4])
        b = self._series([dates[0], dates[2], dates[3]], [10, 30, 40])
        panel = align_panel({"A": a, "B": b}, AlignmentPolicy(max_missing=0.5))
        assert list(panel.calendar.strftime("%Y-%m-%d")) == [dates[0], dates[2], dates[3]]

    def test_series_over_threshold_dropped(self):
        dates = pd.bdate_range("2016-01-04", periods=10)
        a = pd.Series(np.arange(10.0), index=dates)
        b = pd.Series(np.arange(7.0), index=dates[:7])
        panel = align_panel({"A": a, "B": b}, AlignmentPolicy(max_missing=0.2))
        assert panel.labels == ("A",)
        assert panel.t == 10

    def test_all_dropped(self):
        dates = pd.bdate_range("2016-01-04", periods=10)
        a = pd.Series(np.arange(5.0), index=dates[:5])
        b = pd.Series(np.arange(5.0), index=dates[5:])
        with pytest.raises(AllSeriesDropped):
            align_panel({"A": a, "B": b}, AlignmentPolicy(max_missing=0.2))

    def test_disjoint_intersection_is_empty(self):
        dates = pd.bdate_range("2016-01-04", periods=4)
        a = pd.Series([1.0, 2.0], index=dates[:2])
        b = pd.Series([3.0, 4.0], index=dates[2:])
        with pytest.raises(EmptyCalendar):
            align_panel({"A": a, "B": b}, AlignmentPolicy(max_missing=0.5))

    def test_idempotent(self, write_file):
        path = write_file("prices.csv", "date,SPX,UKX\n2016-01-04,100,50\n2016-01-05,101,51\n2016-01-06,102,52\n")
        panel = align_panel(price_frame(load_prices(path, format="wide")))
        again = align_panel(panel)
        assert again.labels == panel.labels
        assert again.calendar.equals(panel.calendar)
        np.testing.assert_array_equal(again.values, panel.values)
        assert again.kind == PanelKind.PRICE
