# coding:utf-8
import os
from math import ceil
from typing import Sequence, Union

import numpy as np
from PIL import Image

from .exception_handler import ContractError, ShapeError


GRID_SEPARATOR = 2


def centerCrop(image: Image.Image) -> Image.Image:
    """ crop the largest centred square """
    w, h = image.size
    side = min(w, h)
    left, top = (w - side) // 2, (h - side) // 2
    return image.crop((left, top, left + side, top + side))


def loadImage(path: str, resolution: int) -> np.ndarray:
    """ decode an image file to a `[resolution, resolution, 3]` float32 array in [-1, 1] """
    with Image.open(path) as image:
        image = centerCrop(image.convert("RGB"))
        if image.size != (resolution, resolution):
            image = image.resize((resolution, resolution), Image.Resampling.BILINEAR)

        return toUnit(np.asarray(image))


def toUnit(pixels: np.ndarray) -> np.ndarray:
    """ 8-bit pixels to [-1, 1] """
    return (pixels.astype(np.float32) / 127.5 - 1.0).astype(np.float32)


def toPixels(values: np.ndarray) -> np.ndarray:
    """ [-1, 1] to 8-bit pixels, round((v + 1) * 127.5) """
    values = np.asarray(values, dtype=np.float64)
    if not np.isfinite(values).all():
        raise ContractError("cannot encode non-finite pixel values")

    return np.clip(np.rint((values + 1.0) * 127.5), 0, 255).astype(np.uint8)


def _array(image) -> np.ndarray:
    return image.numpy() if hasattr(image, "numpy") else np.asarray(image)


def _saveAtomic(image: Image.Image, path: str):
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    tmp = path + ".tmp"
    image.save(tmp, format="PNG")
    os.replace(tmp, path)


def writePng(image: np.ndarray, path: str):
    """ save one `[H, W, 3]` image with values in [-1, 1] as 8-bit RGB """
    image = _array(image)
    if image.ndim != 3 or image.shape[-1] != 3:
        raise ShapeError(f"writePng: expected [H, W, 3], got {image.shape}")

    _saveAtomic(Image.fromarray(toPixels(image)), path)


def makeGrid(images: Union[np.ndarray, Sequence[np.ndarray]], cols: int) -> np.ndarray:
    """ tile images row-major with white separators, returns 8-bit pixels """
    images = [_array(i) for i in images]
    if not images:
        raise ContractError("makeGrid: no images")
    if cols < 1:
        raise ContractError(f"makeGrid: cols must be >= 1, got {cols}")

    h, w = images[0].shape[:2]
    cols = min(cols, len(images))
    rows = ceil(len(images) / cols)
    s = GRID_SEPARATOR
    canvas = np.full((rows * h + (rows - 1) * s, cols * w + (cols - 1) * s, 3), 255, dtype=np.uint8)
    for i, image in enumerate(images):
        if image.shape != (h, w, 3):
            raise ShapeError(f"makeGrid: image {i} has shape {image.shape}, expected {(h, w, 3)}")

        r, c = divmod(i, cols)
        canvas[r * (h + s):r * (h + s) + h, c * (w + s):c * (w + s) + w] = toPixels(image)

    return canvas


def writeGrid(images, cols: int, path: str):
    _saveAtomic(Image.fromarray(makeGrid(images, cols)), path)
