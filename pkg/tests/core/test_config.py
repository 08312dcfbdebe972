# coding:utf-8
import pytest

from core.common.config import (BoolSerializer, Config, ConfigItem, OptionsConfigItem, OptionsValidator,
                                RangeConfigItem, RangeValidator, parseKeyValue)
from core.common.exception_handler import ConfigError


class DemoConfig(Config):

    width = RangeConfigItem("Shape", "width", 4, RangeValidator(1, 16))
    mode = OptionsConfigItem("Shape", "mode", "fast", OptionsValidator(["fast", "slow"]))
    rate = ConfigItem("Run", "rate", 0.5)
    verbose = ConfigItem("Run", "verbose", False)


class TestParse:

    def test_comments_and_blanks(self):
        text = "# header\n\nwidth = 8  # trailing\n mode=slow \n"
        assert parseKeyValue(text) == {"width": "8", "mode": "slow"}

    def test_line_without_equals(self):
        with pytest.raises(ConfigError, match=":2:"):
            parseKeyValue("width = 8\nnonsense\n", "demo.cfg")

    @pytest.mark.parametrize("text, value", [("true", True), ("No", False), ("on", True), ("0", False)])
    def test_booleans(self, text, value):
        assert BoolSerializer().deserialize(text) is value


class TestConfig:

    def test_defaults_and_attribute_access(self):
        cfg = DemoConfig()
        assert (cfg.width, cfg.mode, cfg.rate, cfg.verbose) == (4, "fast", 0.5, False)
        assert DemoConfig.width.name == "width"

    def test_set_parses_text(self):
        cfg = DemoConfig()
        cfg.set("width", "12", parse=True)
        cfg.set("verbose", "yes", parse=True)
        cfg.rate = 2
        assert (cfg.width, cfg.verbose, cfg.rate) == (12, True, 2.0)
        assert isinstance(cfg.rate, float)

    def test_unknown_key_is_named(self):
        with pytest.raises(ConfigError, match="`height`"):
            DemoConfig().set("height", 3)

    @pytest.mark.parametrize("key, text", [("width", "17"), ("width", "four"), ("mode", "medium")])
    def test_invalid_values_are_rejected(self, key, text):
        with pytest.raises(ConfigError, match=key):
            DemoConfig().set(key, text, parse=True)

    def test_save_load_round_trip(self, tmp_path):
        cfg = DemoConfig(width=9, mode="slow", verbose=True)
        cfg.save(tmp_path / "demo.cfg")

        text = (tmp_path / "demo.cfg").read_text()
        assert "# [Shape]" in text and "width = 9" in text
        assert DemoConfig().load(tmp_path / "demo.cfg").toDict() == cfg.toDict()

    def test_load_unknown_key(self, tmp_path):
        (tmp_path / "bad.cfg").write_text("width = 3\ncolour = red\n")
        with pytest.raises(ConfigError, match="colour"):
            DemoConfig().load(tmp_path / "bad.cfg")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            DemoConfig().load(tmp_path / "absent.cfg")
