from .exception_handler import (HoloError, ShapeError, ContractError, NonFiniteError, CheckpointError,
                                ConfigError, DatasetError, exceptionHandler)
from .config import *
from .image_utils import centerCrop, loadImage, toUnit, toPixels, writePng, makeGrid, writeGrid
