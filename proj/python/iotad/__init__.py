"""Python access to the iotad intrusion detectors."""

import json

from ._core import (
    Bundle,
    IotadError,
    RunConfig,
    category_of,
    confusion,
    nearest_rank_percentile,
    parse_record,
    sha256_hex,
)
from . import _core

__all__ = [
    "Bundle",
    "IotadError",
    "RunConfig",
    "category_of",
    "config",
    "confusion",
    "dataset_summary",
    "evaluate",
    "ingest",
    "metrics",
    "nearest_rank_percentile",
    "parse_record",
    "sha256_hex",
    "train",
]


def config(**settings):
    """RunConfig with dotted keys given as keyword arguments ('.' -> '__')."""
    c = RunConfig()
    for key, value in settings.items():
        c.set(key.replace("__", "."), str(value).lower() if isinstance(value, bool) else str(value))
    return c


def dataset_summary(path):
    return json.loads(_core.dataset_summary_json(str(path)))


def metrics(truth, predicted, n_classes=5, mode="weighted"):
    return json.loads(_core.metrics_json(list(truth), list(predicted), n_classes, mode))


def ingest(cfg):
    summary, _log = _core.run_ingest_json(cfg)
    return json.loads(summary)


def train(cfg):
    """Trains and writes <out>/bundle; returns the run summary."""
    summary, _log = _core.run_train_json(cfg)
    return json.loads(summary)


def evaluate(cfg, bundle, threshold_percentile=None, lambda_=None):
    """Returns (report dict, console text)."""
    report, log = _core.run_evaluate_json(cfg, str(bundle), threshold_percentile, lambda_)
    return json.loads(report), log
