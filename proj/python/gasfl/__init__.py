"""Federated energy forecasting with data-quality and contribution rewards."""

import json

from ._core import (
    ConfigError,
    GasflError,
    IoError,
    ParseError,
    ShapeError,
    allocate,
    contribution,
    corr_score,
    gen_data,
    normalize,
    quant_score,
    render_report,
    simulate_json,
    smape,
    smape_new,
    train_linear,
)


def simulate(config, seed=None, full_transcript=False):
    """Runs a scenario (path or dict) and returns the report as a dict."""
    return json.loads(simulate_json(config, seed, full_transcript))


__all__ = [
    "ConfigError",
    "GasflError",
    "IoError",
    "ParseError",
    "ShapeError",
    "allocate",
    "contribution",
    "corr_score",
    "gen_data",
    "normalize",
    "quant_score",
    "render_report",
    "simulate",
    "simulate_json",
    "smape",
    "smape_new",
    "train_linear",
]
