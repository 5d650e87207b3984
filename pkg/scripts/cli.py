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
Command line entry point. Run from the project root:

    python -m scripts.cli sentiment --config config/config.toml
    python -m scripts.cli te --k 1 --k 2 --k 3 --k 4 --h silverman --m 1000

Exit codes: 0 ok, 2 configuration, 3 data, 4 numeric failure, 5 internal.
"""
import logging
from pathlib import Path
from typing import Annotated, Any, Callable, Dict, List, Optional, Sequence

import typer

from config.loader import PATH_FIELDS, RunConfig, load_config
from config.logger_config import setup_logging
from core import constants, pipeline
from core.exceptions import ConfigError, PolarityFlowError

logger = logging.getLogger(__name__)

app = typer.Typer(
    help="News polarity and index return analysis: spectra, noise comparison, information flow.",
    no_args_is_help=True,
    add_completion=False,
)

ConfigOption = Annotated[Path, typer.Option("--config", "-c", help="Run configuration (TOML).")]
SeedOption = Annotated[Optional[int], typer.Option("--seed", help="Global seed.")]
JobsOption = Annotated[Optional[int], typer.Option("--n-jobs", help="Parallel workers.")]
OutputOption = Annotated[Optional[Path], typer.Option("--output-dir", help="Artifact directory.")]
LogOption = Annotated[Optional[str], typer.Option("--log-level", help="DEBUG, INFO, WARNING, ...")]

DEFAULT_CONFIG = Path(constants.CONFIG_FILE_PATH)


def _common(seed, n_jobs, output_dir, log_level) -> Dict[str, Any]:
    return {
        "seed": seed,
        "n_jobs": n_jobs,
        "output_dir": str(output_dir) if output_dir is not None else None,
        "log_level": log_level,
    }


def _execute(config: Path, overrides: Dict[str, Any], action: Callable[[RunConfig], Any],
             require_paths: Sequence[str] = PATH_FIELDS) -> None:
    """Loads the configuration, runs one stage and maps failures to exit codes."""
    setup_logging(logger_name="polarity_flow", log_level=overrides.get("log_level") or "INFO")
    try:
        cfg = load_config(str(config), overrides, require_paths=require_paths)
        setup_logging(logger_name="polarity_flow", log_level=cfg.log_level)
        result = action(cfg)
        if result is not None:
            typer.echo(str(result))
    except PolarityFlowError as e:
        logger.error(f"{type(e).__name__}: {e}")
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(code=e.exit_code)
    except Exception as e:
        logger.critical(f"Unexpected failure: {e}", exc_info=True)
        typer.echo(f"Internal error: {e}", err=True)
        raise typer.Exit(code=constants.EXIT_INTERNAL)


def _bandwidth_overrides(h: Optional[str]) -> Dict[str, Any]:
    if h is None:
        return {}
    if h.lower() == "silverman":
        return {"te.bandwidth_mode": "silverman"}
    try:
        return {"te.bandwidth_mode": "fixed", "te.h": float(h)}
    except ValueError:
        raise ConfigError(f"expected 'silverman' or a number, got {h!r}", field="te.h")


@app.command()
def sentiment(
    config: ConfigOption = DEFAULT_CONFIG,
    keyword: Annotated[Optional[List[str]], typer.Option("--keyword", "-k", help="Only these keywords (repeatable).")] = None,
    impute: Annotated[Optional[str], typer.Option(help="zero or carry_forward")] = None,
    seed: SeedOption = None,
    n_jobs: JobsOption = None,
    output_dir: OutputOption = None,
    log_level: LogOption = None,
):
    """Scores the news into one daily polarity CSV per keyword."""
    overrides = _common(seed, n_jobs, output_dir, log_level)
    overrides.update({"sentiment.keywords": keyword or None, "sentiment.impute": impute})
    _execute(config, overrides, lambda cfg: pipeline.run_sentiment(cfg, pipeline.build_panels(cfg)))


@app.command()
def rmt(
    config: ConfigOption = DEFAULT_CONFIG,
    window: Annotated[Optional[int], typer.Option("--window", help="Sliding window length T_s.")] = None,
    step: Annotated[Optional[int], typer.Option("--step", help="Days between window starts.")] = None,
    windows: Annotated[Optional[bool], typer.Option("--windows/--no-windows", help="Sliding-window analysis.")] = None,
    window_eigenvectors: Annotated[Optional[bool], typer.Option(
        "--window-eigenvectors/--no-window-eigenvectors", help="Eigenvector matrix file per window.")] = None,
    polarity_calendar: Annotated[Optional[str], typer.Option(
        "--polarity-calendar", help="'returns' (T-1 days) or 'full' (T days) for the polarity spectra.")] = None,
    seed: SeedOption = None,
    n_jobs: JobsOption = None,
    output_dir: OutputOption = None,
    log_level: LogOption = None,
):
    """Spectra, noise-band overlay, IPR and sliding-window dynamics of both panels."""
    overrides = _common(seed, n_jobs, output_dir, log_level)
    overrides.update({
        "rmt.window": window,
        "rmt.step": step,
        "rmt.windows": windows,
        "rmt.window_eigenvectors": window_eigenvectors,
        "rmt.polarity_calendar": polarity_calendar,
    })
    _execute(config, overrides, lambda cfg: pipeline.run_rmt(cfg, pipeline.build_panels(cfg)))


@app.command()
def cwoe(
    config: ConfigOption = DEFAULT_CONFIG,
    realizations: Annotated[Optional[int], typer.Option("--realizations", help="Noise realizations.")] = None,
    seed: SeedOption = None,
    n_jobs: JobsOption = None,
    output_dir: OutputOption = None,
    log_level: LogOption = None,
):
    """Partitioned correlation C, its noise counterpart C' and the structure metric."""
    overrides = _common(seed, n_jobs, output_dir, log_level)
    overrides["cwoe.realizations"] = realizations
    _execute(config, overrides, lambda cfg: pipeline.run_cwoe(cfg, pipeline.build_panels(cfg)))


@app.command()
def te(
    config: ConfigOption = DEFAULT_CONFIG,
    k: Annotated[Optional[List[int]], typer.Option("--k", help="Destination history length (repeatable).")] = None,
    l: Annotated[Optional[List[int]], typer.Option("--l", help="Source history length, paired with --k.")] = None,
    h: Annotated[Optional[str], typer.Option("--h", help="'silverman' or a fixed box radius.")] = None,
    m: Annotated[Optional[int], typer.Option("--m", help="Shuffled surrogates per pair.")] = None,
    seed: SeedOption = None,
    n_jobs: JobsOption = None,
    output_dir: OutputOption = None,
    log_level: LogOption = None,
):
    """Effective transfer entropy matrices, one per (k, l)."""
    overrides = _common(seed, n_jobs, output_dir, log_level)
    overrides.update({"te.k": k or None, "te.l": (l or k) or None, "te.M": m})
    try:
        overrides.update(_bandwidth_overrides(h))
    except ConfigError as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(code=e.exit_code)
    _execute(config, overrides, lambda cfg: pipeline.run_te(cfg, pipeline.build_panels(cfg)))


@app.command()
def network(
    config: ConfigOption = DEFAULT_CONFIG,
    k: Annotated[Optional[List[int]], typer.Option("--k", help="History lengths to analyse (repeatable).")] = None,
    l: Annotated[Optional[List[int]], typer.Option("--l", help="Paired with --k.")] = None,
    grid_points: Annotated[Optional[int], typer.Option("--grid-points", help="Thresholds over [0, 1].")] = None,
    ratio_mode: Annotated[Optional[str], typer.Option("--ratio-mode", help="sum or mean")] = None,
    seed: SeedOption = None,
    output_dir: OutputOption = None,
    log_level: LogOption = None,
):
    """Threshold sweep of the relative out-degree over the ETE networks."""
    overrides = _common(seed, None, output_dir, log_level)
    overrides.update({"te.k": k or None, "te.l": (l or k) or None,
                      "network.grid_points": grid_points, "network.ratio_mode": ratio_mode})
    _execute(config, overrides, pipeline.run_network, require_paths=())


@app.command()
def report(
    config: ConfigOption = DEFAULT_CONFIG,
    output_dir: OutputOption = None,
    log_level: LogOption = None,
):
    """Bundles the stage records into one validated report.json."""
    _execute(config, _common(None, None, output_dir, log_level), pipeline.run_report, require_paths=())


@app.command()
def fetch(
    config: ConfigOption = DEFAULT_CONFIG,
    keyword: Annotated[Optional[List[str]], typer.Option("--keyword", "-k", help="Keywords to fetch (repeatable).")] = None,
    begin: Annotated[Optional[str], typer.Option("--begin", help="First publication date, YYYY-MM-DD.")] = None,
    end: Annotated[Optional[str], typer.Option("--end", help="Last publication date, YYYY-MM-DD.")] = None,
    log_level: LogOption = None,
):
    """Downloads articles into the configured news file (needs NYT_API_KEY)."""
    overrides = _common(None, None, None, log_level)
    overrides.update({"fetch.begin": begin, "fetch.end": end})
    _execute(config, overrides, lambda cfg: pipeline.run_fetch(cfg, keyword), require_paths=("universe",))


if __name__ == "__main__":
    app()
