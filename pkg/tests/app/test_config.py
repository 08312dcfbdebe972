# coding:utf-8
from pathlib import Path

import pytest

from app.common.config import Primitive, TrainConfig
from core.common.exception_handler import ConfigError


CONFIGS = Path(__file__).resolve().parents[2] / "configs"


class TestTrainConfig:

    def test_defaults(self):
        cfg = TrainConfig()
        assert (cfg.resolution, cfg.latentDim, cfg.batchSize) == (64, 128, 16)
        assert (cfg.lambdaIdentity, cfg.lambdaStyle, cfg.lrG, cfg.beta1) == (1.0, 1.0, 2e-4, 0.5)
        assert cfg.syntheticPrimitive is Primitive.CHAIR and cfg.isSynthetic

    def test_default_file_matches_defaults(self):
        assert TrainConfig().load(CONFIGS / "default.cfg").toDict() == TrainConfig().toDict()

    @pytest.mark.parametrize("name", ["chairs_synthetic.cfg", "faces.cfg", "smoke.cfg"])
    def test_shipped_configs_are_valid(self, name):
        TrainConfig().load(CONFIGS / name).validate()

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="learning_rate"):
            TrainConfig().set("learning_rate", "0.1", parse=True)

    @pytest.mark.parametrize("key, text", [("resolution", "48"), ("batch_size", "1"), ("lambda_style", "-1"),
                                           ("synthetic_primitive", "sphere"), ("no_rotation", "maybe")])
    def test_invalid_values(self, key, text):
        with pytest.raises(ConfigError):
            TrainConfig().set(key, text, parse=True)

    @pytest.mark.parametrize("key", ["azimuth_min", "azimuth_max", "elevation_min", "elevation_max", "lr_g"])
    @pytest.mark.parametrize("text", ["nan", "inf", "-inf"])
    def test_non_finite_numbers(self, key, text):
        with pytest.raises(ConfigError, match=key):
            TrainConfig().set(key, text, parse=True)

    def test_text_values(self):
        cfg = TrainConfig()
        cfg.set("no_rotation", "yes", parse=True)
        cfg.set("synthetic_primitive", "cube", parse=True)
        cfg.set("out", "runs\\win", parse=True)
        assert cfg.noRotation is True and cfg.syntheticPrimitive is Primitive.CUBE
        assert cfg.out == "runs/win"

    def test_save_load_round_trip(self, tmp_path):
        cfg = TrainConfig(resolution=32, traditional_z=True, lambda_style=0.25, synthetic_primitive=Primitive.CUBE,
                          dataset="data/faces")
        cfg.save(tmp_path / "run.cfg")
        loaded = TrainConfig().load(tmp_path / "run.cfg")
        assert loaded.toDict() == cfg.toDict()
        assert not loaded.isSynthetic

    def test_inverted_pose_range(self):
        with pytest.raises(ConfigError, match="azimuth_min"):
            TrainConfig(azimuth_min=10.0, azimuth_max=-10.0).validate()

    def test_pose_range(self):
        r = TrainConfig(elevation_min=-5.0, elevation_max=5.0).poseRange()
        assert (r.azimuth_min, r.elevation_max, r.scale_max) == (-50.0, 5.0, 1.1)
