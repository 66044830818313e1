"""Config text parsing: exact keys, line-numbered errors."""

import pytest

from invmask.config import load_config, parse_config
from invmask.errors import ConfigError
from invmask.losses import LossWeights

MINIMAL = "dataset_dir = /tmp/faces\niterations = 100\n"


class TestParsing:
    def test_minimal_with_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.dataset_dir == "/tmp/faces"
        assert cfg.iterations == 100
        assert cfg.learning_rate == 1e-5
        assert cfg.batch_size == 16
        assert cfg.lr_decay_interval == 1000
        assert cfg.weights == LossWeights(1, 3, 1)
        assert cfg.image_size == 128

    def test_every_key(self):
        cfg = parse_config(
            "dataset_dir = data\n"
            "iterations = 50\n"
            "learning_rate = 1e-4\n"
            "batch_size = 4\n"
            "lr_decay_interval = 10\n"
            "weights = 1:1:1\n"
            "image_size = 64\n"
            "seed = 7\n"
            "checkpoint_interval = 25\n"
            "num_blocks = 2\n"
            "growth = 8\n"
        )
        assert cfg.learning_rate == 1e-4
        assert cfg.weights == LossWeights(1, 1, 1)
        assert cfg.num_blocks == 2

    def test_comments_and_blanks(self):
        cfg = parse_config("# a comment\n\ndataset_dir = d\niterations = 5  # trailing\n")
        assert cfg.iterations == 5


class TestErrors:
    def test_unknown_key_reports_line(self):
        with pytest.raises(ConfigError, match="line 3"):
            parse_config("dataset_dir = d\niterations = 5\nlearing_rate = 1e-4\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("just words\n")

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("dataset_dir = d\niterations = soon\n")

    def test_bad_weights(self):
        with pytest.raises(ConfigError, match="line 3"):
            parse_config("dataset_dir = d\niterations = 5\nweights = 1:3\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="line 3"):
            parse_config("dataset_dir = d\niterations = 5\niterations = 6\n")

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="dataset_dir"):
            parse_config("iterations = 5\n")

    def test_validation_failure_surfaces(self):
        with pytest.raises(ConfigError, match="even"):
            parse_config("dataset_dir = d\niterations = 5\nimage_size = 63\n")


class TestFiles:
    def test_load_config(self, tmp_path):
        path = tmp_path / "train.cfg"
        path.write_text(MINIMAL)
        assert load_config(path).iterations == 100

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.cfg")
