# core/nyt_service.py
import datetime as dt
import hashlib
import json
import logging
import threading
import time
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd
import requests
from tenacity import Retrying, before_sleep_log, retry_if_exception_type, stop_after_attempt, wait_exponential

from core import constants
from core.article_source import ArticleProvider
from core.exceptions import AuthError, NetworkError, RateLimited
from core.models import NewsDocument

logger = logging.getLogger(__name__)


class NytArticleService(ArticleProvider):
    """
    Client for the Article Search API. Requests to one endpoint are serialized
    and spaced by `min_interval` seconds; raw pages are cached on disk.
    """

    _endpoint_locks: Dict[str, threading.Lock] = {}
    _last_request: Dict[str, float] = {}
    _registry_lock = threading.Lock()

    def __init__(
        self,
        api_key: str,
        endpoint: str = constants.ARTICLE_SEARCH_URL,
        cache_dir: Optional[str] = constants.FETCH_CACHE_PATH,
        max_attempts: int = 5,
        backoff: float = 6.0,
        min_interval: float = 6.0,
        timeout: float = 30.0,
        session: Optional[requests.Session] = None,
    ):
        if not api_key:
            raise AuthError(f"No API key. Set {constants.API_KEY_ENV} in the environment or .env")
        self.api_key = api_key
        self.endpoint = endpoint
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.min_interval = min_interval
        self.timeout = timeout
        self.session = session or requests.Session()

        with self._registry_lock:
            self._lock = self._endpoint_locks.setdefault(endpoint, threading.Lock())

    # --- Cache ---

    def _cache_path(self, keyword: str, begin: dt.date, end: dt.date, page: int) -> Optional[Path]:
        if self.cache_dir is None:
            return None
        key = hashlib.sha256(f"{keyword}|{begin.isoformat()}|{end.isoformat()}|{page}".encode()).hexdigest()[:24]
        return self.cache_dir / f"{key}.json"

    # --- HTTP ---

    def _request(self, params: dict) -> dict:
        with self._lock:
            wait = self._last_request.get(self.endpoint, 0.0) + self.min_interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            try:
                response = self.session.get(self.endpoint, params=params, timeout=self.timeout)
            except requests.exceptions.Timeout as e:
                raise NetworkError(f"Request timed out after {self.timeout}s") from e
            except requests.exceptions.RequestException as e:
                raise NetworkError(str(e)) from e
            finally:
                self._last_request[self.endpoint] = time.monotonic()

        if response.status_code in (401, 403):
            raise AuthError(f"Article search rejected the API key (HTTP {response.status_code})")
        if response.status_code == 429:
            raise RateLimited("Article search rate limit hit (HTTP 429)")
        if response.status_code >= 400:
            raise NetworkError(f"Article search failed with HTTP {response.status_code}")
        try:
            return response.json()
        except ValueError as e:
            raise NetworkError("Article search returned a non-JSON body") from e

    def _request_with_retry(self, params: dict) -> dict:
        retrying = Retrying(
            stop=stop_after_attempt(self.max_attempts),
            wait=wait_exponential(multiplier=self.backoff, max=120),
            retry=retry_if_exception_type(RateLimited),
            before_sleep=before_sleep_log(logger, logging.WARNING),
            reraise=True,
        )
        return retrying(self._request, params)

    # --- Provider interface ---

    def fetch_page(self, keyword: str, begin: dt.date, end: dt.date, page: int) -> List[NewsDocument]:
        cache_path = self._cache_path(keyword, begin, end, page)
        if cache_path is not None and cache_path.exists():
            with open(cache_path, "r", encoding="utf-8") as f:
                payload = json.load(f)
        else:
            params = {
                "q": keyword,
                "begin_date": begin.strftime("%Y%m%d"),
                "end_date": end.strftime("%Y%m%d"),
                "page": page,
                "api-key": self.api_key,
            }
            payload = self._request_with_retry(params)
            if cache_path is not None:
                cache_path.parent.mkdir(parents=True, exist_ok=True)
                with open(cache_path, "w", encoding="utf-8") as f:
                    json.dump(payload, f)

        return self._parse(keyword, payload)

    @staticmethod
    def _parse(keyword: str, payload: dict) -> List[NewsDocument]:
        docs = ((payload or {}).get("response") or {}).get("docs") or []
        documents = []
        for doc in docs:
            headline = (doc.get("headline") or {}).get("main") or ""
            parts = [headline, doc.get("abstract") or "", doc.get("lead_paragraph") or ""]
            body = " ".join(part.strip() for part in parts if part and part.strip())
            if not body or not doc.get("pub_date"):
                continue
            # pub_date looks like 2016-03-01T05:00:00+0000
            stamp = pd.Timestamp(doc["pub_date"])
            if stamp.tzinfo is not None:
                stamp = stamp.tz_convert("UTC")
            documents.append(NewsDocument(keyword=keyword, date=stamp.date(), body=body))
        return documents
