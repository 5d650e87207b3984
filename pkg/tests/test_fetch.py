import datetime as dt
from unittest.mock import Mock

import pytest
import requests

from core.exceptions import AuthError, NetworkError, RateLimited
from core.ingest import fetch_articles, load_news
from core.nyt_service import NytArticleService

BEGIN = dt.date(2016, 3, 1)
END = dt.date(2016, 3, 31)


def _response(status: int = 200, docs=None) -> Mock:
    response = Mock(status_code=status)
    response.json.return_value = {"response": {"docs": docs if docs is not None else []}}
    return response


def _article(i: int) -> dict:
    return {
        "headline": {"main": f"Headline {i}"},
        "abstract": f"Abstract {i}.",
        "lead_paragraph": f"Lead {i}.",
        "pub_date": "2016-03-0%dT05:00:00+0000" % (i + 1),
    }


def _service(session, **kwargs) -> NytArticleService:
    kwargs.setdefault("cache_dir", None)
    return NytArticleService(api_key="test-key", session=session, min_interval=0, backoff=0, **kwargs)


class TestNytArticleService:
    def test_missing_key(self):
        with pytest.raises(AuthError):
            NytArticleService(api_key="", session=Mock())

    def test_empty_page(self):
        session = Mock()
        session.get.return_value = _response(docs=[])
        assert _service(session).fetch("Mexico", BEGIN, END) == []

    def test_five_articles(self):
        session = Mock()
        session.get.side_effect = [_response(docs=[_article(i) for i in range(5)]), _response(docs=[])]
        documents = _service(session).fetch("Mexico", BEGIN, END)
        assert len(documents) == 5
        assert {d.keyword for d in documents} == {"Mexico"}
        assert documents[0].body == "Headline 0 Abstract 0. Lead 0."
        assert documents[4].date == dt.date(2016, 3, 5)

    def test_query_parameters(self):
        session = Mock()
        session.get.return_value = _response(docs=[])
        _service(session).fetch_page("Mexico", BEGIN, END, 2)
        params = session.get.call_args.kwargs["params"]
        assert params["q"] == "Mexico"
        assert params["begin_date"] == "20160301"
        assert params["end_date"] == "20160331"
        assert params["page"] == 2

    def test_rate_limit_then_success(self, caplog):
        session = Mock()
        session.get.side_effect = [_response(429), _response(429), _response(429), _response(docs=[_article(0)])]
        documents = _service(session).fetch_page("Mexico", BEGIN, END, 0)
        assert len(documents) == 1
        assert session.get.call_count == 4
        assert sum("Retrying" in record.getMessage() for record in caplog.records) == 3

    def test_rate_limit_exhausted(self):
        session = Mock()
        session.get.return_value = _response(429)
        with pytest.raises(RateLimited):
            _service(session, max_attempts=2).fetch_page("Mexico", BEGIN, END, 0)
        assert session.get.call_count == 2

    def test_rejected_key(self):
        session = Mock()
        session.get.return_value = _response(401)
        with pytest.raises(AuthError):
            _service(session).fetch_page("Mexico", BEGIN, END, 0)

    def test_connection_failure(self):
        session = Mock()
        session.get.side_effect = requests.exceptions.ConnectionError("down")
        with pytest.raises(NetworkError):
            _service(session).fetch_page("Mexico", BEGIN, END, 0)

    def test_pages_are_cached(self, tmp_path):
        session = Mock()
        session.get.return_value = _response(docs=[_article(0)])
        service = _service(session, cache_dir=str(tmp_path / "cache"))
        first = service.fetch_page("Mexico", BEGIN, END, 0)
        second = service.fetch_page("Mexico", BEGIN, END, 0)
        assert first == second
        assert session.get.call_count == 1


def test_fetch_articles_appends_news_file(tmp_path):
    session = Mock()
    session.get.side_effect = [_response(docs=[_article(0), _article(1)]), _response(docs=[])]
    out = tmp_path / "news.ndjson"
    documents = fetch_articles("Chile", (BEGIN, END), "unused", out_path=out, provider=_service(session))
    assert len(documents) == 2
    assert load_news(out, keywords={"Chile"}).documents == documents
