"""Line-based `key = value` training configuration files.

Keys are exactly the TrainConfig field names; anything else is an error
that names the offending line, because a silently ignored typo in
`learning_rate` costs someone an overnight run.  Blank lines and `#`
comments are allowed.  `weights` takes a colon ratio such as `1:3:1`.
"""

from dataclasses import fields

from .errors import ConfigError
from .losses import LossWeights
from .trainer import TrainConfig

_PARSERS = {
    "dataset_dir": str,
    "iterations": int,
    "learning_rate": float,
    "batch_size": int,
    "lr_decay_interval": int,
    "weights": LossWeights.from_string,
    "image_size": int,
    "seed": int,
    "checkpoint_interval": int,
    "num_blocks": int,
    "growth": int,
}

assert set(_PARSERS) == {f.name for f in fields(TrainConfig)}

_REQUIRED = ("dataset_dir", "iterations")


def parse_config(text):
    """Parse config text into a TrainConfig; errors carry 1-based line numbers."""
    values = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line_no, f"expected 'key = value', got {raw.strip()!r}")
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _PARSERS:
            raise ConfigError(line_no, f"unknown key {key!r}")
        if key in values:
            raise ConfigError(line_no, f"duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(line_no, f"bad value for {key!r}: {exc}") from exc
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(0, f"missing required key {key!r}")
    try:
        return TrainConfig(**values)
    except ValueError as exc:
        raise ConfigError(0, str(exc)) from exc


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(0, f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
