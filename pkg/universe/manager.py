# Copyright © 2025 SRF Development, Inc. All rights reserved.
# SPDX-License-Identifier: MIT

import tomllib
import logging
from typing import Optional, List, Dict

from pydantic import BaseModel

from core import constants
from core.exceptions import ConfigError

logger = logging.getLogger(__name__)

# Singleton instance
_instance: Optional["UniverseManager"] = None


class Country(BaseModel):
    name: str
    ticker: str
    keyword: str


class UniverseManager:
    """A class to load and query the country / index / keyword registry from a TOML file."""
    def __init__(self, universe_file_path: str):
        logger.info(f"Initializing UniverseManager with file: {universe_file_path}")
        try:
            with open(universe_file_path, "rb") as f:
                raw = tomllib.load(f)
        except FileNotFoundError:
            logger.error(f"Universe file not found at: {universe_file_path}")
            raise

        self.countries: List[Country] = [Country(**entry) for entry in raw.get("countries", [])]
        if not self.countries:
            raise ConfigError("no [[countries]] entries", field="universe")
        self._by_ticker: Dict[str, Country] = {c.ticker: c for c in self.countries}
        self._by_keyword: Dict[str, Country] = {c.keyword: c for c in self.countries}
        if len(self._by_ticker) != len(self.countries) or len(self._by_keyword) != len(self.countries):
            raise ConfigError("tickers and keywords must be unique", field="universe")

    @property
    def keywords(self) -> List[str]:
        return [c.keyword for c in self.countries]

    @property
    def tickers(self) -> List[str]:
        return [c.ticker for c in self.countries]

    def by_ticker(self, ticker: str) -> Optional[Country]:
        return self._by_ticker.get(ticker)

    def by_keyword(self, keyword: str) -> Optional[Country]:
        return self._by_keyword.get(keyword)


def initialize_universe(universe_file_path: str = constants.UNIVERSE_FILE_PATH, force: bool = False):
    """
    Initializes the singleton instance of the UniverseManager.
    """
    global _instance
    if _instance is not None and not force:
        logger.warning("UniverseManager is already initialized. Ignoring call.")
        return
    _instance = UniverseManager(universe_file_path)


def get_universe() -> UniverseManager:
    """
    Retrieves the singleton instance.
    """
    if _instance is None:
        raise RuntimeError("UniverseManager has not been initialized.")
    return _instance
