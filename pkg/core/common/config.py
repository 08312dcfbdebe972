# coding:utf-8
import logging
import math
import os
from copy import deepcopy
from enum import Enum
from pathlib import Path
from typing import Dict, List

from .exception_handler import ConfigError


logger = logging.getLogger(__name__)


class ConfigValidator:
    """ Config validator """

    def validate(self, value):
        """ Verify whether the value is legal """
        return True

    def correct(self, value):
        """ normalize a legal value """
        return value


class RangeValidator(ConfigValidator):
    """ Range validator, both bounds inclusive, `None` means unbounded

    Numbers must be finite even without bounds.
    """

    def __init__(self, min=None, max=None):
        self.min = min
        self.max = max
        self.range = (min, max)

    def validate(self, value):
        if isinstance(value, float) and not math.isfinite(value):
            return False
        if self.min is not None and value < self.min:
            return False

        return self.max is None or value <= self.max


class OptionsValidator(ConfigValidator):
    """ Options validator """

    def __init__(self, options):
        if not options:
            raise ValueError("The `options` can't be empty.")

        if isinstance(options, type) and issubclass(options, Enum):
            options = options._member_map_.values()

        self.options = list(options)

    def validate(self, value):
        return value in self.options


class BoolValidator(OptionsValidator):
    """ Boolean validator """

    def __init__(self):
        super().__init__([True, False])


class FolderValidator(ConfigValidator):
    """ Folder validator, the folder is created on demand """

    def validate(self, value):
        return isinstance(value, (str, Path)) and str(value) != ""

    def correct(self, value):
        return str(Path(value)).replace("\\", "/")


class ConfigSerializer:
    """ Config serializer """

    def serialize(self, value):
        """ serialize config value """
        return str(value)

    def deserialize(self, value: str):
        """ deserialize config from config file's value """
        return value


class IntSerializer(ConfigSerializer):
    """ Integer serializer """

    def deserialize(self, value: str):
        return int(value)


class FloatSerializer(ConfigSerializer):
    """ Float serializer """

    def serialize(self, value):
        return repr(float(value))

    def deserialize(self, value: str):
        return float(value)


class BoolSerializer(ConfigSerializer):
    """ Boolean serializer, accepts true/false, yes/no, on/off, 1/0 """

    TRUE = {"true", "yes", "on", "1"}
    FALSE = {"false", "no", "off", "0"}

    def serialize(self, value):
        return "true" if value else "false"

    def deserialize(self, value):
        if isinstance(value, bool):
            return value

        v = str(value).strip().lower()
        if v in self.TRUE:
            return True
        if v in self.FALSE:
            return False

        raise ValueError(f"not a boolean: {value!r}")


class EnumSerializer(ConfigSerializer):
    """ enumeration class serializer """

    def __init__(self, enumClass):
        self.enumClass = enumClass

    def serialize(self, value):
        return str(value.value)

    def deserialize(self, value):
        return self.enumClass(value)


class ConfigItem:
    """ Config item """

    def __init__(self, group, name, default, validator=None, serializer=None, help=""):
        """
        Parameters
        ----------
        group: str
            config group name, only used to organize help output

        name: str
            config key, unique inside a config class

        default:
            default value

        validator: ConfigValidator
            config validator

        serializer: ConfigSerializer
            config serializer

        help: str
            one line description shown by `--help`
        """
        self.group = group
        self.name = name
        self.validator = validator or ConfigValidator()
        self.serializer = serializer or _serializerFor(default)
        self.help = help
        self.defaultValue = self._check(default)

    def _check(self, v):
        if not self.validator.validate(v):
            raise ConfigError(f"invalid value for `{self.name}`: {v!r}")

        return self.validator.correct(v)

    def __get__(self, obj, objtype=None):
        # class access yields the item, instance access the current value
        if obj is None:
            return self

        return obj._values[self.name]

    def __set__(self, obj, value):
        obj.set(self, value)

    @property
    def key(self):
        """ get the config key """
        return self.name

    def __str__(self):
        return f'{self.__class__.__name__}[name={self.name}, default={self.defaultValue}]'

    def serialize(self, value):
        return self.serializer.serialize(value)

    def deserialize(self, text):
        """ parse and validate a value read from a file or the command line """
        try:
            value = self.serializer.deserialize(text)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid value for `{self.name}`: {text!r} ({e})") from e

        return self._check(value)


class RangeConfigItem(ConfigItem):
    """ Config item of range """

    @property
    def range(self):
        """ get the available range of config """
        return self.validator.range

    def __str__(self):
        return f'{self.__class__.__name__}[range={self.range}, default={self.defaultValue}]'


class OptionsConfigItem(ConfigItem):
    """ Config item with options """

    @property
    def options(self):
        return self.validator.options

    def __str__(self):
        return f'{self.__class__.__name__}[options={self.options}, default={self.defaultValue}]'


def _serializerFor(default):
    if isinstance(default, bool):
        return BoolSerializer()
    if isinstance(default, int):
        return IntSerializer()
    if isinstance(default, float):
        return FloatSerializer()

    return ConfigSerializer()


class Config:
    """ Base class of flat `key = value` configurations

    Subclasses declare `ConfigItem`s as class attributes; instances hold the
    values. Unknown keys and invalid values raise `ConfigError`.
    """

    def __init__(self, **overrides):
        self._values = {item.name: deepcopy(item.defaultValue) for item in self.items()}
        self.file = None
        for k, v in overrides.items():
            self.set(k, v)

    @classmethod
    def items(cls) -> List[ConfigItem]:
        """ config items in declaration order """
        items, seen = [], set()
        for klass in reversed(cls.__mro__):
            for name, item in vars(klass).items():
                if isinstance(item, ConfigItem) and item.name not in seen:
                    seen.add(item.name)
                    items.append(item)

        return items

    @classmethod
    def item(cls, key: str) -> ConfigItem:
        for item in cls.items():
            if item.name == key:
                return item

        raise ConfigError(f"unknown config key `{key}`")

    def get(self, item):
        """ get the value of config item, `item` may be a key or an item """
        key = item.name if isinstance(item, ConfigItem) else item
        if key not in self._values:
            raise ConfigError(f"unknown config key `{key}`")

        return self._values[key]

    def set(self, item, value, parse=False):
        """ set the value of config item

        Parameters
        ----------
        item: ConfigItem or str
            config item or its key

        value:
            the new value of config item

        parse: bool
            whether `value` is text that must be deserialized first
        """
        key = item.name if isinstance(item, ConfigItem) else item
        item = self.item(key)
        if parse or (isinstance(value, str) and not isinstance(item.defaultValue, str)):
            value = item.deserialize(value)
        else:
            if isinstance(item.defaultValue, float) and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            value = item._check(value)

        self._values[key] = value

    def toDict(self, serialize=True) -> Dict[str, object]:
        """ convert config items to `dict` """
        return {
            item.name: item.serialize(self._values[item.name]) if serialize else self._values[item.name]
            for item in self.items()
        }

    def save(self, file=None):
        """ save config as `key = value` lines grouped by item group """
        file = Path(file or self.file)
        file.parent.mkdir(parents=True, exist_ok=True)
        lines, group = [], None
        for item in self.items():
            if item.group != group:
                group = item.group
                lines.append(f"\n# [{group}]" if lines else f"# [{group}]")

            lines.append(f"{item.name} = {item.serialize(self._values[item.name])}")

        tmp = file.with_name(file.name + ".tmp")
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        os.replace(tmp, file)

    def load(self, file):
        """ load config

        Parameters
        ----------
        file: str or Path
            the path of the `key = value` config file
        """
        self.file = Path(file)
        for k, v in readKeyValueFile(self.file).items():
            self.set(k, v, parse=True)

        logger.debug("loaded %s", self.file)
        return self


def parseKeyValue(text: str, source="<config>") -> Dict[str, str]:
    """ parse `key = value` lines, `#` starts a comment """
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue

        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected `key = value`, got {line!r}")

        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")

        values[key] = value

    return values


def readKeyValueFile(file) -> Dict[str, str]:
    """ the keys a config file sets explicitly, as unparsed text """
    try:
        text = Path(file).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {file}: {e}") from e

    return parseKeyValue(text, str(file))
