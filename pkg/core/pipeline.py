# Copyright © 2025 SRF Development, Inc. All rights reserved.
# SPDX-License-Identifier: MIT

"""
Stage runners behind the CLI. Each stage writes into its own sub-directory of
the output directory and finishes with a `stage.json` that records the config
hash, the tool version and a SHA-256 digest of every file it wrote.
"""

import datetime as dt
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import jsonschema
import numpy as np
import pandas as pd

from config.loader import RunConfig, api_key, config_hash
from core import __version__, constants
from core.cwoe import partition_correlation, structure_metric_ensemble, synth_noisy
from core.exceptions import AllSeriesDropped, AuthError, ConfigError, MissingArtifact
from core.infoflow import ete_matrix
from core.ingest import align_panel, fetch_articles, load_news, load_prices, price_frame
from core.models import AlignedPanel, PanelKind, PanelPair, stack_panels
from core.network import rescale_ete, threshold_graph, threshold_sweep, write_graph
from core.rmt import (
    MPParams,
    comovement,
    compute_returns,
    correlation_matrix,
    count_above,
    distribution_curves,
    distribution_summary,
    dominant_components,
    dynamics_frame,
    eigendecompose,
    ipr,
    mean_correlation,
    mp_overlay,
    normalize_panel,
    sliding_spectra,
    windows_frame,
)
from core.sentiment import Lexicon, PolaritySeries, polarity_panel, polarity_series
from universe.manager import Country, get_universe, initialize_universe

logger = logging.getLogger(__name__)

REPORT_SCHEMA = {
    "type": "object",
    "required": ["version", "config_hash", "stages"],
    "properties": {
        "version": {"type": "string"},
        "config_hash": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "stages": {
            "type": "object",
            "required": list(constants.STAGES),
            "additionalProperties": False,
            "properties": {
                stage: {
                    "type": "object",
                    "required": ["present"],
                    "properties": {
                        "present": {"type": "boolean"},
                        "config_hash": {"type": "string"},
                        "matches_config": {"type": "boolean"},
                        "version": {"type": "string"},
                        "files": {"type": "object", "additionalProperties": {"type": "string"}},
                        "summary": {"type": "object"},
                    },
                    "if": {"properties": {"present": {"const": True}}},
                    "then": {"required": ["config_hash", "matches_config", "version", "files"]},
                }
                for stage in constants.STAGES
            },
        },
    },
}


# --- Output helpers ---

def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (Path, dt.date)):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_json(path: Path, payload: Any) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class StageWriter:
    """Single owner of one stage's output directory."""

    def __init__(self, cfg: RunConfig, stage: str):
        self.cfg = cfg
        self.stage = stage
        self.directory = Path(cfg.output_dir) / stage
        self.directory.mkdir(parents=True, exist_ok=True)
        self.files: List[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.directory / name

    def csv(self, frame: pd.DataFrame, name: str, **kwargs) -> Path:
        kwargs.setdefault("index", False)
        target = self.path(name)
        frame.to_csv(target, **kwargs)
        return target

    def json(self, payload: Any, name: str) -> Path:
        target = self.path(name)
        write_json(target, payload)
        return target

    def finish(self, summary: Optional[dict] = None) -> Path:
        record = {
            "stage": self.stage,
            "version": __version__,
            "config_hash": config_hash(self.cfg),
            "files": {name: _sha256(self.directory / name) for name in sorted(set(self.files))},
            "summary": summary or {},
        }
        target = self.directory / constants.STAGE_FILE_NAME
        write_json(target, record)
        logger.info(f"Stage '{self.stage}' wrote {len(record['files'])} files to {self.directory}.")
        return target


def file_slug(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in label)


# --- Inputs ---

@dataclass(frozen=True)
class PanelSet:
    """Everything the analysis stages read, built once per command."""

    prices: AlignedPanel
    series: Dict[str, PolaritySeries]
    countries: List[Country]
    pair: PanelPair
    full_polarity: AlignedPanel

    @property
    def returns(self) -> AlignedPanel:
        return self.pair.returns

    @property
    def polarity(self) -> AlignedPanel:
        return self.pair.polarity

    def normalized(self) -> Tuple[AlignedPanel, AlignedPanel]:
        return normalize_panel(self.returns), normalize_panel(self.polarity)

    def stacked(self) -> AlignedPanel:
        """Normalized [returns; polarities] with 'R:<ticker>' / 'P:<keyword>' labels."""
        returns, polarity = self.normalized()
        return stack_panels(
            returns.relabel([f"R:{c.ticker}" for c in self.countries]),
            polarity.relabel([f"P:{c.keyword}" for c in self.countries]),
        )


def selected_keywords(cfg: RunConfig) -> List[str]:
    universe = get_universe()
    if cfg.sentiment.keywords is None:
        return universe.keywords
    unknown = [k for k in cfg.sentiment.keywords if universe.by_keyword(k) is None]
    if unknown:
        raise ConfigError(f"keywords {unknown} are not in the universe", field="sentiment.keywords")
    return list(cfg.sentiment.keywords)


def build_panels(cfg: RunConfig) -> PanelSet:
    """
    Loads prices, news and lexicon and builds the paired return and polarity
    panels. Polarity is scored on the price calendar and then cut to the
    return calendar, so P(t) pairs with the return labelled t. The uncut
    polarity panel is kept for spectra on the full calendar.
    """
    initialize_universe(str(cfg.paths.universe), force=True)
    universe = get_universe()
    keywords = selected_keywords(cfg)

    prices = align_panel(
        price_frame(load_prices(cfg.paths.prices, cfg.paths.prices_format, universe)),
        cfg.alignment,
        PanelKind.PRICE,
    )
    countries = [c for c in universe.countries if c.keyword in keywords and c.ticker in prices.labels]
    if not countries:
        raise AllSeriesDropped("no configured country has both a price series and a keyword")
    missing = [c.keyword for c in universe.countries if c.keyword in keywords and c.ticker not in prices.labels]
    if missing:
        logger.warning(f"No usable prices for {missing}; their polarity is not paired.")

    news = load_news(cfg.paths.news, keywords=universe.keywords, strict=cfg.sentiment.strict_keywords)
    lexicon = Lexicon.from_tsv(cfg.paths.lexicon)
    series = polarity_series(
        news.documents, keywords, prices.calendar, lexicon,
        impute=cfg.sentiment.impute, aggregation=cfg.sentiment.aggregation,
        off_calendar=cfg.sentiment.off_calendar, n_jobs=cfg.n_jobs,
    )

    returns = compute_returns(prices.select([c.ticker for c in countries]), label=cfg.rmt.return_label)
    full_polarity = polarity_panel({c.keyword: series[c.keyword] for c in countries})
    polarity = full_polarity.restrict(returns.calendar)
    pair = PanelPair(returns, polarity, tuple(c.name for c in countries))
    logger.info(f"Built panels for {len(countries)} countries over {returns.t} days.")
    return PanelSet(prices, series, countries, pair, full_polarity)


# --- Stages ---

def run_sentiment(cfg: RunConfig, panels: PanelSet) -> Path:
    writer = StageWriter(cfg, "sentiment")
    rows = {}
    for keyword, series in panels.series.items():
        series.to_csv(writer.path(f"polarity_{file_slug(keyword)}.csv"))
        rows[keyword] = {
            "days": len(series),
            "imputed": int(series.frame["imputed"].sum()),
            "documents": int(series.frame["doc_count"].sum()),
            "no_hit": int(series.frame["no_hit_count"].sum()),
        }
    return writer.finish({"keywords": rows})


def _spectral_analysis(panel: AlignedPanel, name: str, cfg: RunConfig, writer: StageWriter):
    normalized = normalize_panel(panel)
    c = correlation_matrix(normalized)
    spectrum = eigendecompose(c)
    params = MPParams.from_shape(normalized.t, normalized.n)

    writer.csv(c.to_frame(), f"correlation_{name}.csv", index=True, index_label="label")
    writer.csv(pd.DataFrame({
        "index": np.arange(1, c.n + 1),
        "eigenvalue": spectrum.eigenvalues,
        "ipr": spectrum.iprs(),
    }), f"spectrum_{name}.csv")
    writer.csv(mp_overlay(params), f"mp_overlay_{name}.csv")
    writer.csv(spectrum.to_frame(), f"eigenvectors_{name}.csv", index=True, index_label="label")

    summary = {
        "N": normalized.n,
        "T": normalized.t,
        "Q": params.Q,
        "lambda_minus": params.lambda_minus,
        "lambda_plus": params.lambda_plus,
        "lambda_min": spectrum.lambda_min,
        "lambda_max": spectrum.lambda_max,
        "lambda_max_exceeds_bound": spectrum.lambda_max > params.lambda_plus,
        "count_above": count_above(spectrum, params),
        "mean_corr": mean_correlation(c),
        "ipr_top": ipr(spectrum.top_vector),
        "ipr_bottom": ipr(spectrum.bottom_vector),
        "dominant_top": dominant_components(spectrum.top_vector, spectrum.labels),
        "dominant_bottom": dominant_components(spectrum.bottom_vector, spectrum.labels),
    }

    dynamics = None
    if cfg.rmt.windows:
        records = sliding_spectra(panel, cfg.rmt.window, cfg.rmt.step, n_jobs=cfg.n_jobs)
        writer.csv(windows_frame(records), f"windows_{name}.csv")
        dynamics = dynamics_frame(records)
        writer.csv(dynamics, f"dynamics_{name}.csv")
        if cfg.rmt.window_eigenvectors:
            for record in records:
                writer.csv(record.spectrum.to_frame(), f"eigenvectors_{name}_{record.date:%Y-%m-%d}.csv",
                           index=True, index_label="label")
        summary["n_windows"] = len(records)
        if len(records) > 1:
            summary["lambda_max_vs_mean_corr"] = comovement(dynamics["lambda_max"], dynamics["mean_corr"])
    return summary, normalized, dynamics


def run_rmt(cfg: RunConfig, panels: PanelSet) -> Path:
    writer = StageWriter(cfg, "rmt")
    summary: Dict[str, Any] = {}
    returns_summary, returns_norm, returns_dyn = _spectral_analysis(panels.returns, "r", cfg, writer)
    polarity = panels.full_polarity if cfg.rmt.polarity_calendar == "full" else panels.polarity
    polarity_summary, _, polarity_dyn = _spectral_analysis(polarity, "p", cfg, writer)
    summary["returns"] = returns_summary
    summary["polarity"] = polarity_summary
    summary["polarity_calendar"] = cfg.rmt.polarity_calendar

    if returns_dyn is not None:
        # windows pair up by start date; a full polarity calendar has one extra window
        joined = returns_dyn.merge(polarity_dyn, on="window_start", suffixes=("_r", "_p"))
        if len(joined) > 1:
            summary["comovement"] = {
                field: comovement(joined[f"{field}_p"], joined[f"{field}_r"])
                for field in ("lambda_max", "ipr_N", "ipr_1")
            }

    returns_values = returns_norm.values.ravel()
    returns_distribution = distribution_summary(returns_values, fit_t=cfg.rmt.fit_student_t)
    summary["distribution"] = {
        "returns": returns_distribution,
        "polarity": distribution_summary(polarity.values.ravel()),
    }
    bins = cfg.rmt.distribution_bins
    writer.csv(distribution_curves(returns_values, bins, df=returns_distribution.get("student_t_df")),
               "distribution_r.csv")
    writer.csv(distribution_curves(polarity.values.ravel(), bins), "distribution_p.csv")
    writer.json(summary, "summary.json")
    return writer.finish({
        "lambda_max_exceeds_bound": {
            "returns": returns_summary["lambda_max_exceeds_bound"],
            "polarity": polarity_summary["lambda_max_exceeds_bound"],
        },
        "n_windows": returns_summary.get("n_windows", 0),
    })


def run_cwoe(cfg: RunConfig, panels: PanelSet) -> Path:
    writer = StageWriter(cfg, "cwoe")
    returns, polarity = panels.normalized()
    partitioned = partition_correlation(returns, polarity)
    surrogate = synth_noisy(partitioned.rr, partitioned.pp, returns.t, seed=(cfg.seed, 0))

    writer.csv(partitioned.to_frame(), "C.csv", index=True, index_label="label")
    writer.csv(pd.DataFrame(surrogate.c_prime, index=list(partitioned.labels), columns=list(partitioned.labels)),
               "C_prime.csv", index=True, index_label="label")
    ensemble = structure_metric_ensemble(
        partitioned, returns.t, realizations=cfg.cwoe.realizations, seed=cfg.seed, variants=cfg.cwoe.variants
    )
    metrics = {
        "seed": cfg.seed,
        "N": partitioned.n,
        "T": returns.t,
        "realizations": cfg.cwoe.realizations,
        "variants": {
            variant: {**stats, "first": stats["values"][0]} for variant, stats in ensemble.items()
        },
    }
    writer.json(metrics, "metric.json")
    return writer.finish({variant: {"mean": s["mean"], "std": s["std"]} for variant, s in ensemble.items()})


def ete_file_stem(k: int, l: int) -> str:
    return f"ete_k{k}_l{l}"


def run_te(cfg: RunConfig, panels: PanelSet) -> Path:
    writer = StageWriter(cfg, "te")
    stacked = panels.stacked()
    matrices = []
    for te_cfg in cfg.te_configs():
        stem = ete_file_stem(te_cfg.k, te_cfg.l)
        matrix = ete_matrix(stacked, te_cfg, n_jobs=cfg.n_jobs)
        matrix.write(writer.path(f"{stem}.csv"), writer.path(f"{stem}.json"))
        matrices.append({"k": te_cfg.k, "l": te_cfg.l, "h": matrix.sidecar()["h"], "failures": len(matrix.failures)})
    return writer.finish({"matrices": matrices})


def read_ete(cfg: RunConfig, k: int, l: int) -> Tuple[np.ndarray, List[str]]:
    path = Path(cfg.output_dir) / "te" / f"{ete_file_stem(k, l)}.csv"
    if not path.exists():
        raise MissingArtifact(f"{path} not found; run the 'te' stage first")
    frame = pd.read_csv(path, index_col=0)
    return frame.to_numpy(dtype=float), [str(label) for label in frame.columns]


def run_network(cfg: RunConfig) -> Path:
    writer = StageWriter(cfg, "network")
    grid = cfg.network.grid()
    records = []
    for k, l in cfg.te.histories():
        values, labels = read_ete(cfg, k, l)
        rescaled = rescale_ete(values)
        sweep = threshold_sweep(rescaled, labels, grid, mode=cfg.network.ratio_mode)
        stem = f"k{k}_l{l}"
        writer.csv(sweep.to_frame(), f"sweep_{stem}.csv")

        graph = threshold_graph(rescaled, labels, sweep.argmax.th)
        write_graph(graph, writer.path(f"edges_{stem}.csv"), writer.path(f"nodes_{stem}.csv"))
        argmax = sweep.argmax.record()
        argmax.update({"k": k, "l": l, "mode": cfg.network.ratio_mode})
        logger.info(f"k={k}, l={l}: relative out-degree peaks at Th={sweep.argmax.th:.2f} "
                    f"(ratio {argmax['ratio']}, {sweep.argmax.edges} edges).")
        records.append(argmax)
    writer.json({"grid_points": len(grid), "argmax": records}, "argmax.json")
    return writer.finish({"argmax": records})


def run_report(cfg: RunConfig) -> Path:
    """Bundles every stage.json in the output directory; missing stages are marked absent."""
    current = config_hash(cfg)
    stages: Dict[str, Any] = {}
    for stage in constants.STAGES:
        path = Path(cfg.output_dir) / stage / constants.STAGE_FILE_NAME
        if not path.exists():
            stages[stage] = {"present": False}
            continue
        with open(path, "r", encoding="utf-8") as f:
            record = json.load(f)
        stages[stage] = {
            "present": True,
            "config_hash": record["config_hash"],
            "matches_config": record["config_hash"] == current,
            "version": record["version"],
            "files": {f"{stage}/{name}": digest for name, digest in record["files"].items()},
            "summary": record.get("summary", {}),
        }
        if not stages[stage]["matches_config"]:
            logger.warning(f"Stage '{stage}' was produced under a different configuration.")

    bundle = {"version": __version__, "config_hash": current, "stages": stages}
    jsonschema.validate(bundle, REPORT_SCHEMA)
    target = Path(cfg.output_dir) / constants.REPORT_FILE_NAME
    target.parent.mkdir(parents=True, exist_ok=True)
    write_json(target, bundle)
    logger.info(f"Report written to {target}.")
    return target


def run_fetch(cfg: RunConfig, keywords: Optional[Sequence[str]] = None, provider=None) -> int:
    """Downloads articles for each keyword and appends them to the configured news file."""
    initialize_universe(str(cfg.paths.universe), force=True)
    keywords = list(keywords) if keywords else selected_keywords(cfg)
    if not cfg.fetch.begin or not cfg.fetch.end:
        raise ConfigError("fetch needs both a begin and an end date", field="fetch.begin")
    try:
        begin = dt.date.fromisoformat(cfg.fetch.begin)
        end = dt.date.fromisoformat(cfg.fetch.end)
    except ValueError as e:
        raise ConfigError(f"dates must be ISO formatted: {e}", field="fetch") from e
    credentials = api_key()
    if provider is None and not credentials:
        raise AuthError(f"No API key. Set {constants.API_KEY_ENV} in the environment or .env")

    total = 0
    for keyword in keywords:
        documents = fetch_articles(
            keyword, (begin, end), credentials, endpoint=cfg.fetch.endpoint,
            out_path=cfg.paths.news, provider=provider, max_pages=cfg.fetch.max_pages,
        )
        total += len(documents)
    logger.info(f"Fetched {total} articles for {len(keywords)} keywords into {cfg.paths.news}.")
    return total
