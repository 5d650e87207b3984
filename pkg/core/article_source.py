# core/article_source.py
import datetime as dt
import logging
from abc import ABC, abstractmethod
from typing import List

from core.models import NewsDocument

logger = logging.getLogger(__name__)


class ArticleProvider(ABC):
    """
    Abstract Base Class for news article sources (Strategy Pattern).
    The pipeline only depends on this interface, so a live search API and a
    test double are interchangeable.
    """

    @abstractmethod
    def fetch_page(self, keyword: str, begin: dt.date, end: dt.date, page: int) -> List[NewsDocument]:
        """
        Returns one result page for a keyword and date range.

        Args:
            keyword (str): The country search term.
            begin (date), end (date): Inclusive publication date range.
            page (int): Zero-based page index.

        Returns:
            List[NewsDocument]: Empty when the page is past the last result.
        """
        pass

    def fetch(self, keyword: str, begin: dt.date, end: dt.date, max_pages: int = 100) -> List[NewsDocument]:
        """Walks result pages until an empty one (or `max_pages`)."""
        documents: List[NewsDocument] = []
        for page in range(max_pages):
            batch = self.fetch_page(keyword, begin, end, page)
            if not batch:
                break
            documents.extend(batch)
        else:
            logger.warning(f"Stopped '{keyword}' after {max_pages} pages; more results may exist.")
        logger.info(f"Fetched {len(documents)} articles for '{keyword}' ({begin} to {end}).")
        return documents
