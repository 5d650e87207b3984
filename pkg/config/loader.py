# Copyright © 2025 SRF Development, Inc. All rights reserved.
# SPDX-License-Identifier: MIT

import hashlib
import json
import logging
import os
import tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core import constants
from core.exceptions import ConfigError
from core.models import AlignmentPolicy, TEConfig

# Load Environment Variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)

PATH_FIELDS = ("prices", "news", "lexicon", "universe")

# Fields that never change an artifact
UNHASHED_FIELDS = {
    "n_jobs": True,
    "log_level": True,
    "output_dir": True,
    "fetch": True,
    "sentiment": {"strict_keywords": True},
}


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PathsConfig(_Section):
    prices: Path = Path(constants.DATA_DIR) / "prices.csv"
    prices_format: Literal["long", "wide"] = "long"
    news: Path = Path(constants.DATA_DIR) / "news.ndjson"
    lexicon: Path = Path(constants.LEXICON_PATH)
    universe: Path = Path(constants.UNIVERSE_FILE_PATH)


class SentimentConfig(_Section):
    impute: Literal["zero", "carry_forward"] = "zero"
    aggregation: Literal["document", "pooled"] = "document"
    off_calendar: Literal["drop", "next"] = "drop"
    keywords: Optional[List[str]] = Field(default=None, description="Subset of universe keywords; all when unset.")
    strict_keywords: bool = False


class RmtConfig(_Section):
    window: int = Field(default=constants.DEFAULT_WINDOW, ge=2)
    step: int = Field(default=constants.DEFAULT_STEP, ge=1)
    windows: bool = True
    return_label: Literal["start", "end"] = "start"
    fit_student_t: bool = True
    window_eigenvectors: bool = Field(default=False, description="Write the eigenvector matrix of every window.")
    polarity_calendar: Literal["returns", "full"] = "returns"
    distribution_bins: int = Field(default=constants.DISTRIBUTION_BINS, ge=1)


class CwoeConfig(_Section):
    realizations: int = Field(default=constants.DEFAULT_REALIZATIONS, ge=1)
    variants: List[Literal["neighboring", "corresponding"]] = ["neighboring", "corresponding"]


class TESection(_Section):
    k: List[int] = [1, 2, 3, 4]
    l: Optional[List[int]] = Field(default=None, description="Paired with k; defaults to k.")
    h: float = Field(default=0.36, gt=0.0)
    bandwidth_mode: Literal["fixed", "silverman"] = "silverman"
    box: Literal["half", "full"] = "half"
    log_base: Literal["2", "e"] = "2"
    M: int = Field(default=constants.DEFAULT_SURROGATES, ge=1)
    theiler: int = Field(default=0, ge=0)

    @field_validator("log_base", mode="before")
    @classmethod
    def coerce_log_base(cls, value):
        return str(value)

    @model_validator(mode="after")
    def pair_histories(self):
        if self.l is not None and len(self.l) != len(self.k):
            raise ValueError("te.l must list one history length per te.k entry")
        if min(self.k + (self.l or [])) < 1:
            raise ValueError("history lengths must be >= 1")
        return self

    def histories(self) -> List[Tuple[int, int]]:
        return list(zip(self.k, self.l if self.l is not None else self.k))


class NetworkConfig(_Section):
    grid_points: int = Field(default=101, ge=1, description="Evenly spaced thresholds over [0, 1].")
    ratio_mode: Literal["sum", "mean"] = "sum"

    def grid(self) -> np.ndarray:
        if self.grid_points == 1:
            return np.zeros(1)
        return np.arange(self.grid_points) / (self.grid_points - 1)


class FetchConfig(_Section):
    begin: Optional[str] = None
    end: Optional[str] = None
    endpoint: str = constants.ARTICLE_SEARCH_URL
    max_pages: int = Field(default=100, ge=1)


class RunConfig(_Section):
    """Everything one pipeline run depends on."""

    seed: int = Field(..., ge=0, description="Global seed; there is no wall-clock seeding.")
    n_jobs: int = Field(default=1, ge=1)
    output_dir: Path = Path(constants.OUTPUT_DIR)
    log_level: str = "INFO"
    paths: PathsConfig = PathsConfig()
    alignment: AlignmentPolicy = AlignmentPolicy()
    sentiment: SentimentConfig = SentimentConfig()
    rmt: RmtConfig = RmtConfig()
    cwoe: CwoeConfig = CwoeConfig()
    te: TESection = TESection()
    network: NetworkConfig = NetworkConfig()
    fetch: FetchConfig = FetchConfig()

    def te_configs(self) -> List[TEConfig]:
        section = self.te
        return [
            TEConfig(k=k, l=l, h=section.h, bandwidth_mode=section.bandwidth_mode, box=section.box,
                     log_base=section.log_base, M=section.M, seed=self.seed, theiler=section.theiler)
            for k, l in section.histories()
        ]


def _field_name(error: dict) -> str:
    return ".".join(str(part) for part in error["loc"]) or "config"


def _validate(raw: Mapping[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        field = _field_name(first)
        raise ConfigError(f"{field}: {first['msg']}", field=field) from e


def validate_paths(cfg: RunConfig, fields: Sequence[str] = PATH_FIELDS) -> None:
    """Raises ConfigError naming the first configured input path that does not exist."""
    for name in fields:
        path = getattr(cfg.paths, name)
        if not Path(path).expanduser().exists():
            raise ConfigError(f"paths.{name}: file not found at {path}", field=f"paths.{name}")


def apply_overrides(cfg: RunConfig, overrides: Optional[Mapping[str, Any]]) -> RunConfig:
    """
    Applies dotted-key overrides (e.g. {'te.M': 100}) and validates again.
    None values leave the field untouched.
    """
    if not overrides:
        return cfg
    raw = cfg.model_dump(mode="json")
    for key, value in overrides.items():
        if value is None:
            continue
        node = raw
        *parents, leaf = key.split(".")
        for part in parents:
            if not isinstance(node.get(part), dict):
                raise ConfigError(f"unknown config section '{part}' in override '{key}'", field=key)
            node = node[part]
        node[leaf] = value
    return _validate(raw)


def load_config(
    config_path: str = constants.CONFIG_FILE_PATH,
    overrides: Optional[Mapping[str, Any]] = None,
    require_paths: Sequence[str] = PATH_FIELDS,
) -> RunConfig:
    """
    Reads the TOML run configuration, applies CLI overrides and validates it.
    Secrets are never read from TOML; see `api_key`.
    """
    try:
        with open(config_path, "rb") as f:
            raw = tomllib.load(f)
    except FileNotFoundError as e:
        logger.critical(f"CRITICAL: Config file not found at {config_path}")
        raise ConfigError(f"config file not found at {config_path}", field="config") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid TOML in {config_path}: {e}", field="config") from e

    cfg = apply_overrides(_validate(raw), overrides)
    validate_paths(cfg, require_paths)
    logger.debug(f"Loaded run configuration from {config_path} (hash {config_hash(cfg)[:12]}).")
    return cfg


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the canonical JSON of every field that can change an artifact."""
    payload = cfg.model_dump(mode="json", exclude=UNHASHED_FIELDS)
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def api_key() -> Optional[str]:
    # API Key MUST come from Environment (.env), NOT TOML
    return os.getenv(constants.API_KEY_ENV)


def to_toml(cfg: RunConfig) -> str:
    """A TOML rendering of `cfg`, used to write ready-to-run configs next to fixtures."""
    data: Dict[str, Any] = cfg.model_dump(mode="json", exclude_none=True)
    lines: List[str] = []
    sections = {key: value for key, value in data.items() if isinstance(value, dict)}
    for key, value in data.items():
        if key not in sections:
            lines.append(f"{key} = {json.dumps(value)}")
    for name, section in sections.items():
        lines.append("")
        lines.append(f"[{name}]")
        for key, value in section.items():
            lines.append(f"{key} = {json.dumps(value)}")
    return "\n".join(lines) + "\n"
