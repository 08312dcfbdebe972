# coding:utf-8
import logging
import os
from typing import Dict, List

import numpy as np

from core.common.exception_handler import ContractError, DatasetError, exceptionHandler
from core.common.image_utils import loadImage


logger = logging.getLogger(__name__)

IMAGE_SUFFIX = ".png"


class ImageDataset:
    """ In-memory images `[M, R, R, 3]` in [-1, 1] with per-epoch shuffling

    Parameters
    ----------
    images: np.ndarray
        decoded images

    source: str
        folder path or `synthetic`
    """

    def __init__(self, images: np.ndarray, source: str = ""):
        if images.ndim != 4 or images.shape[-1] != 3 or images.shape[1] != images.shape[2]:
            raise DatasetError(f"images must be [M, R, R, 3], got {images.shape}")
        if len(images) == 0:
            raise DatasetError(f"no usable images in {source or 'dataset'}")

        self.images = np.ascontiguousarray(images, dtype=np.float32)
        self.source = source
        self.order = np.arange(0)
        self.position = 0
        self.warnedReplacement = False

    def __len__(self):
        return len(self.images)

    def __getitem__(self, index):
        return self.images[index]

    @property
    def resolution(self):
        return self.images.shape[1]

    def state(self) -> Dict[str, np.ndarray]:
        return {"order": self.order.astype(np.int64), "position": np.array([self.position], dtype=np.int64)}

    def load_state(self, state: Dict[str, np.ndarray]):
        order = np.asarray(state["order"], dtype=np.int64)
        if order.size and (order.min() < 0 or order.max() >= len(self)):
            raise DatasetError("stored shuffle order does not fit this dataset")

        self.order = order
        self.position = int(state["position"][0])


@exceptionHandler(None)
def _decode(path: str, resolution: int):
    return loadImage(path, resolution)


def load_folder(path: str, resolution: int) -> ImageDataset:
    """ decode every PNG of a flat folder; undecodable files are skipped """
    if not os.path.isdir(path):
        raise DatasetError(f"dataset folder {path} does not exist")

    names = sorted(n for n in os.listdir(path) if n.lower().endswith(IMAGE_SUFFIX))
    images, skipped = [], 0
    for name in names:
        image = _decode(os.path.join(path, name), resolution)
        if image is None:
            skipped += 1
            continue

        images.append(image)

    if skipped:
        logger.warning("skipped %d undecodable file(s) in %s", skipped, path)
    if not images:
        raise DatasetError(f"no usable {IMAGE_SUFFIX} files in {path}")

    logger.info("loaded %d images from %s at %dx%d", len(images), path, resolution, resolution)
    return ImageDataset(np.stack(images), source=path)


def next_batch(dataset: ImageDataset, rng: np.random.Generator, n: int) -> np.ndarray:
    """ `n` distinct images drawn without replacement, reshuffling per epoch

    The tail of an epoch that cannot fill a batch is dropped. A batch larger
    than the dataset is drawn with replacement instead.
    """
    if n < 1:
        raise ContractError(f"next_batch: n must be >= 1, got {n}")

    if n > len(dataset):
        if not dataset.warnedReplacement:
            logger.warning("batch of %d exceeds %d images, sampling with replacement", n, len(dataset))
            dataset.warnedReplacement = True
        return dataset.images[rng.integers(0, len(dataset), size=n)]

    if dataset.position + n > len(dataset.order):
        dataset.order = rng.permutation(len(dataset))
        dataset.position = 0

    index = dataset.order[dataset.position:dataset.position + n]
    dataset.position += n
    return dataset.images[index]
