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
import logging
import sys

NOISY_LOGGERS = ("urllib3", "requests", "joblib", "faker")


def setup_logging(logger_name: str, log_level: str = "INFO"):
    """
    Configures the root logger so every module's `getLogger(__name__)` reports to stdout.
    """
    logger = logging.getLogger()

    log_level_enum = getattr(logging, log_level.upper(), logging.INFO)
    logger.setLevel(log_level_enum)

    # Prevent duplicate messages if the function is called again (one call per CLI command)
    if logger.hasHandlers():
        logger.handlers.clear()

    handler = logging.StreamHandler(sys.stdout)
    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )
    handler.setFormatter(formatter)

    logger.addHandler(handler)

    for name in NOISY_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)

    logging.getLogger(logger_name).debug(f"Logger '{logger_name}' configured at {log_level.upper()}.")
