# coding:utf-8
import logging
from copy import deepcopy
from functools import wraps


logger = logging.getLogger(__name__)


class HoloError(Exception):
    """ Base class of every error raised by holovox """


class ShapeError(HoloError, ValueError):
    """ Operand shapes are incompatible """


class ContractError(HoloError, RuntimeError):
    """ An operation was called outside of its contract """


class NonFiniteError(HoloError, FloatingPointError):
    """ A NaN or infinity showed up where finite values are required

    Parameters
    ----------
    where: str
        name of the op, layer or loss that produced the value

    index: tuple
        index of the first offending element, if known
    """

    def __init__(self, where: str, index=None, message: str = None):
        self.where = where
        self.index = index
        text = message or f"non-finite value in `{where}`"
        if index is not None:
            text += f" at index {index}"

        super().__init__(text)


class CheckpointError(HoloError, ValueError):
    """ Checkpoint file is corrupt, truncated or incompatible """


class ConfigError(HoloError, ValueError):
    """ Invalid configuration key or value """


class DatasetError(HoloError, ValueError):
    """ Dataset cannot provide images """


def exceptionHandler(*default):
    """ decorator for exception handling

    Parameters
    ----------
    *default:
        the default value returned when an exception occurs
    """

    def outer(func):

        @wraps(func)
        def inner(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except Exception as e:
                logger.warning("%s failed: %s", func.__qualname__, e)
                value = deepcopy(default)
                if len(value) == 0:
                    return None
                elif len(value) == 1:
                    return value[0]

                return value

        return inner

    return outer
