"""Python bindings for the choir interaction-grounding core."""

import json

from ._core import (
    DataError,
    NumericError,
    Predictor,
    ShapeError,
    UsageError,
    __version__,
    aiou,
    auc,
    class_names,
    generate_sample,
    load_sample,
    precision_recall,
    propagate_affordance,
    run_cli,
    sim,
)


def cli(*args):
    """Run a `choir` command in process and return (exit code, stdout, stderr)."""
    return run_cli([str(a) for a in args])


def predictor_config(predictor):
    """Model configuration of a loaded predictor as a dict."""
    return json.loads(predictor.config_json())


__all__ = [
    "DataError",
    "NumericError",
    "Predictor",
    "ShapeError",
    "UsageError",
    "__version__",
    "aiou",
    "auc",
    "class_names",
    "cli",
    "generate_sample",
    "load_sample",
    "precision_recall",
    "predictor_config",
    "propagate_affordance",
    "run_cli",
    "sim",
]
