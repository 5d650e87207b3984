# Copyright © 2025 SRF Development, Inc. All rights reserved.
#
# This file is part of the "polarity-flow" project.
#
# This project is free software: you can redistribute it and/or modify
# it under the terms of the MIT License as published by the Open Source
# Initiative.
#
# This project is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the
# MIT License for more details.
#
# You should have received a copy of the MIT License along with this project.
# If not, see <https://opensource.org/licenses/MIT>.
#
# SPDX-License-Identifier: MIT
"""
Writes the synthetic fixture: prices.csv, news.ndjson and a ready-to-run
config.toml. 218 trading days give 217 returns, the length of the sample
the default window settings were chosen for.

    python -m scripts.generate_fixture --out data/fixture --countries 10 --seed 0
"""
import argparse
import logging
from pathlib import Path
from typing import Union

from config.loader import PathsConfig, RunConfig, SentimentConfig, TESection, to_toml
from config.logger_config import setup_logging
from core import constants
from core.sentiment import Lexicon
from core.synthetic import synthetic_market
from universe.manager import UniverseManager

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parents[1]


def write_fixture(
    directory: Union[str, Path],
    n_countries: int = 10,
    n_days: int = 218,
    seed: int = 0,
    surrogates: int = 100,
) -> Path:
    """Generates the fixture into `directory` and returns the path of its config.toml."""
    directory = Path(directory).resolve()
    lexicon_path = PROJECT_ROOT / constants.LEXICON_PATH
    universe_path = PROJECT_ROOT / constants.UNIVERSE_FILE_PATH

    universe = UniverseManager(str(universe_path))
    countries = universe.countries[:n_countries]
    market = synthetic_market(
        [c.ticker for c in countries],
        [c.keyword for c in countries],
        Lexicon.from_tsv(lexicon_path),
        n_days=n_days,
        seed=seed,
    )
    paths = market.write(directory)

    cfg = RunConfig(
        seed=seed,
        output_dir=directory / "output",
        paths=PathsConfig(prices=paths["prices"], news=paths["news"], lexicon=lexicon_path, universe=universe_path),
        sentiment=SentimentConfig(keywords=[c.keyword for c in countries]),
        te=TESection(M=surrogates),
    )
    config_path = directory / constants.CONFIG_FILE_NAME
    config_path.write_text(to_toml(cfg), encoding="utf-8")
    logger.info(f"Fixture config written to {config_path}.")
    return config_path


if __name__ == "__main__":
    setup_logging(logger_name="polarity_flow", log_level="INFO")

    parser = argparse.ArgumentParser(description="Generate the synthetic polarity-flow fixture.")
    parser.add_argument("--out", default=str(Path(constants.DATA_DIR) / "fixture"), help="Output directory")
    parser.add_argument("--countries", type=int, default=10, help="Number of countries (from the universe)")
    parser.add_argument("--days", type=int, default=218, help="Trading days of prices")
    parser.add_argument("--seed", type=int, default=0, help="Generator seed")
    parser.add_argument("--surrogates", type=int, default=100, help="M written into the fixture config")
    args = parser.parse_args()

    write_fixture(args.out, args.countries, args.days, args.seed, args.surrogates)
