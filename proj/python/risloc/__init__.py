"""Python bindings for the risloc C++ core."""

import json

from ._core import (
    ArtifactMismatch,
    ConfigError,
    Error,
    FormatError,
    GeometryError,
    IoError,
    Model,
    NumericError,
    heatmap_point_count,
    load_dataset,
    percentile_curve,
)
from . import _core

__all__ = [
    "ArtifactMismatch",
    "ConfigError",
    "Error",
    "FormatError",
    "GeometryError",
    "IoError",
    "Model",
    "NumericError",
    "Scene",
    "heatmap_point_count",
    "load_dataset",
    "parameter_count",
    "percentile_curve",
    "preset",
    "train",
]


def _dumps(cfg):
    if cfg is None:
        return ""
    return cfg if isinstance(cfg, str) else json.dumps(cfg)


def Scene(config=None):
    """Build a scene from a dict of overrides (or JSON text)."""
    return _core.Scene(_dumps(config))


def parameter_count(model=None):
    return _core.parameter_count(_dumps(model))


def preset(name):
    return json.loads(_core.preset(name))


def train(dataset_path, model=None, train_config=None):
    """Train on a saved dataset. Returns (Model, history list)."""
    return _core.train(str(dataset_path), _dumps(model), _dumps(train_config))
