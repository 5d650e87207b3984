# Copyright © 2025 SRF Development, Inc. All rights reserved.
# SPDX-License-Identifier: MIT

"""
This module contains constant values used throughout the "polarity-flow" application.
It serves as a single source of truth for conventional paths, filenames, and default values.
"""

import os

# --- Directory Paths (relative to the project root) ---
CONFIG_DIR = "config"
UNIVERSE_DIR = "universe"
DATA_DIR = "data"
CACHE_DIR = ".cache"
OUTPUT_DIR = "output"

# --- Filenames ---
CONFIG_FILE_NAME = "config.toml"
UNIVERSE_FILE_NAME = "countries.toml"
LEXICON_FILE_NAME = "lexicon_sample.tsv"
STAGE_FILE_NAME = "stage.json"
REPORT_FILE_NAME = "report.json"

# --- Full Paths (constructed for convenience) ---
# Note: These assume the application is run from the project root.
CONFIG_FILE_PATH = os.path.join(CONFIG_DIR, CONFIG_FILE_NAME)
UNIVERSE_FILE_PATH = os.path.join(UNIVERSE_DIR, UNIVERSE_FILE_NAME)
LEXICON_PATH = os.path.join(DATA_DIR, LEXICON_FILE_NAME)
FETCH_CACHE_PATH = os.path.join(CACHE_DIR, "articles")

# --- Environment ---
API_KEY_ENV = "NYT_API_KEY"
ARTICLE_SEARCH_URL = "https://api.nytimes.com/svc/search/v2/articlesearch.json"

# --- Stage names (one output sub-directory each) ---
STAGES = ("sentiment", "rmt", "cwoe", "te", "network")

# --- Exit codes ---
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_INTERNAL = 5

# --- Analysis defaults ---
LEXICON_SCORE_BOUND = 4.0
DEFAULT_WINDOW = 160
DEFAULT_STEP = 1
DEFAULT_SURROGATES = 1000
DEFAULT_REALIZATIONS = 100
STUDENT_T_BOUNDS = (2.1, 100.0)
DISTRIBUTION_BINS = 60

# Numerical tolerances
SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-8
EIGEN_CLAMP = 1e-10
NORM_TOL = 1e-8
