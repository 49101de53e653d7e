"""Configuration, orchestration and persistence of verification campaigns."""

from __future__ import annotations

import os
import time

from .. import __version__
from .campaigns import RUNNERS
from .config import ConfigError, ExperimentConfig, build_config
from .records import ResultRecord, Row, emit_csv, emit_json, load_json

__all__ = ["ConfigError", "ExperimentConfig", "ResultRecord", "Row", "build_config",
           "emit_csv", "emit_json", "load_json", "output_paths", "run"]


def output_paths(config: ExperimentConfig) -> dict[str, str]:
    stem = os.path.join(config.out_dir, f"{config.campaign}-{config.hash()[:12]}")
    paths = {}
    if config.format in ("csv", "both"):
        paths["csv"] = stem + ".csv"
    if config.format in ("json", "both"):
        paths["json"] = stem + ".json"
    return paths


def run(config: ExperimentConfig, write: bool = True) -> ResultRecord:
    """Run the configured campaign and (optionally) persist its record."""
    config.validate()
    start = time.perf_counter()
    rows = RUNNERS[config.campaign](config)
    record = ResultRecord(
        campaign=config.campaign, config_hash=config.hash(), seed=config.seed,
        version=__version__, rows=rows, wall_time=time.perf_counter() - start,
        config=config.canonical(),
    )
    if write:
        paths = output_paths(config)
        if "csv" in paths:
            emit_csv(record, paths["csv"])
        if "json" in paths:
            emit_json(record, paths["json"])
    return record
