# coding:utf-8
"""
Procedural dataset: flat-shaded orthographic renderings of a cube or a
two-box chair at pseudo-random azimuths. The azimuth is returned for
evaluation and never reaches training, which sees `ImageDataset` only.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from core.common.exception_handler import ContractError
from core.nn.geometry import Pose, rotation_matrix

from ..common.config import Primitive
from .dataset import ImageDataset


logger = logging.getLogger(__name__)

# boxes as (lower corner, upper corner) in object space, y up
BOXES = {
    Primitive.CUBE: [((-0.45, -0.45, -0.45), (0.45, 0.45, 0.45))],
    Primitive.CHAIR: [((-0.45, -0.45, -0.45), (0.45, -0.25, 0.45)),   # seat
                      ((-0.45, -0.25, -0.45), (0.45, 0.6, -0.3))],    # back
}

LIGHT = np.array([-0.4, 0.6, 0.7]) / np.linalg.norm([-0.4, 0.6, 0.7])
AMBIENT = 0.3
VIEW_EXTENT = 1.0


@dataclass(frozen=True)
class SyntheticSetup:
    primitive: Primitive = Primitive.CHAIR
    palette: int = 8
    background: Tuple[float, float] = (0.05, 0.25)
    azimuth_span: float = 360.0
    elevation: float = 20.0
    size: int = 64
    items: int = 1024
    seed: int = 0

    def __post_init__(self):
        if self.palette < 1 or self.size < 2 or self.items < 1:
            raise ContractError(f"invalid synthetic setup {self}")
        if not 0.0 <= self.background[0] <= self.background[1] <= 1.0:
            raise ContractError(f"background shades must satisfy 0 <= lo <= hi <= 1, got {self.background}")

    def colors(self) -> np.ndarray:
        """ the palette, fixed by the seed """
        return np.random.default_rng([self.seed, 0xC0]).uniform(0.35, 1.0, size=(self.palette, 3))


def render(primitive: Primitive, azimuth: float, elevation: float, size: int,
           color: np.ndarray, background: float) -> np.ndarray:
    """ `[size, size, 3]` image in [0, 1]

    Rays run along -z from the viewer through pixel centres; each is
    intersected with the rotated boxes by the slab test and the nearest hit
    gets Lambert shading from its entry face.
    """
    rot = rotation_matrix(Pose(azimuth, elevation))
    coords = (np.arange(size) + 0.5) / size * 2 * VIEW_EXTENT - VIEW_EXTENT
    ys, xs = np.meshgrid(-coords, coords, indexing="ij")
    origin = np.stack([xs, ys, np.full_like(xs, 4.0)], axis=-1).reshape(-1, 3)

    # to object space: rows of `v @ rot` are R^T v
    o = origin @ rot
    d = np.array([0.0, 0.0, -1.0]) @ rot
    d = np.where(np.abs(d) < 1e-12, 1e-12, d)

    nearest = np.full(len(o), np.inf)
    normal = np.zeros_like(o)
    for lo, hi in BOXES[primitive]:
        t1 = (np.asarray(lo) - o) / d
        t2 = (np.asarray(hi) - o) / d
        tNear, tFar = np.minimum(t1, t2), np.maximum(t1, t2)
        entry = tNear.max(axis=1)
        hit = (tFar.min(axis=1) >= np.maximum(entry, 0.0)) & (entry < nearest)

        axis = tNear.argmax(axis=1)
        faces = np.zeros_like(o)
        faces[np.arange(len(o)), axis] = -np.sign(d[axis])
        nearest = np.where(hit, entry, nearest)
        normal = np.where(hit[:, None], faces, normal)

    shade = AMBIENT + (1.0 - AMBIENT) * np.clip((normal @ rot.T) @ LIGHT, 0.0, 1.0)
    image = np.where(np.isfinite(nearest)[:, None], shade[:, None] * color[None, :], background)
    return image.reshape(size, size, 3)


def synthesize_item(setup: SyntheticSetup, index: int) -> Tuple[np.ndarray, float]:
    """ image in [-1, 1] and its true azimuth in degrees, deterministic per (setup, index) """
    rng = np.random.default_rng([setup.seed, index])
    azimuth = float(rng.uniform(-setup.azimuth_span / 2, setup.azimuth_span / 2))
    color = setup.colors()[rng.integers(setup.palette)]
    background = float(rng.uniform(*setup.background))
    image = render(setup.primitive, azimuth, setup.elevation, setup.size, color, background)
    return (image * 2.0 - 1.0).astype(np.float32), azimuth


def synthesize_dataset(setup: SyntheticSetup) -> Tuple[ImageDataset, np.ndarray]:
    """ the training dataset and, separately, the azimuth of every item """
    images, azimuths = [], []
    for i in range(setup.items):
        image, azimuth = synthesize_item(setup, i)
        images.append(image)
        azimuths.append(azimuth)

    logger.info("rendered %d synthetic %s images at %dx%d", setup.items, setup.primitive.value, setup.size, setup.size)
    return ImageDataset(np.stack(images), source="synthetic"), np.array(azimuths)
