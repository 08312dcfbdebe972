# coding:utf-8
import numpy as np
import pytest
from PIL import Image

from core.common.exception_handler import ContractError, ShapeError
from core.common.image_utils import (GRID_SEPARATOR, centerCrop, loadImage, makeGrid, toPixels, toUnit, writeGrid,
                                     writePng)


class TestPixels:

    def test_affine_map(self):
        assert np.array_equal(toUnit(np.array([0, 255], dtype=np.uint8)), [-1.0, 1.0])
        assert np.array_equal(toPixels(np.array([-1.0, 1.0])), [0, 255])

    def test_out_of_range_is_clipped(self):
        assert np.array_equal(toPixels(np.array([-3.0, 4.0])), [0, 255])

    def test_non_finite_rejected(self):
        with pytest.raises(ContractError):
            toPixels(np.array([np.nan]))


class TestPng:

    def test_round_trip_within_quantization(self, tmp_path, rng):
        image = rng.uniform(-1, 1, size=(12, 12, 3))
        writePng(image, str(tmp_path / "a.png"))
        back = loadImage(str(tmp_path / "a.png"), 12)
        assert back.dtype == np.float32
        assert np.abs(back - image).max() <= 1 / 255 + 1e-6

    def test_non_square_is_centre_cropped(self, tmp_path):
        pixels = np.zeros((80, 100, 3), dtype=np.uint8)
        pixels[:, :10] = (255, 0, 0)
        pixels[:, 10:90] = (0, 0, 255)
        pixels[:, 90:] = (255, 0, 0)
        Image.fromarray(pixels).save(tmp_path / "wide.png")

        assert centerCrop(Image.fromarray(pixels)).size == (80, 80)
        image = loadImage(str(tmp_path / "wide.png"), 16)
        assert image.shape == (16, 16, 3)
        assert np.allclose(image, [-1.0, -1.0, 1.0])

    def test_rejects_wrong_rank(self, tmp_path):
        with pytest.raises(ShapeError):
            writePng(np.zeros((4, 4)), str(tmp_path / "x.png"))


class TestGrid:

    def test_eight_images_four_columns(self, tmp_path):
        images = [np.full((5, 6, 3), -1.0) for _ in range(8)]
        grid = makeGrid(images, 4)
        s = GRID_SEPARATOR
        assert grid.shape == (2 * 5 + s, 4 * 6 + 3 * s, 3)
        assert grid[0, 0, 0] == 0
        assert (grid[5:5 + s] == 255).all()

        writeGrid(images, 4, str(tmp_path / "grid.png"))
        with Image.open(tmp_path / "grid.png") as png:
            assert png.size == (4 * 6 + 3 * s, 2 * 5 + s)

    def test_mismatched_images(self):
        with pytest.raises(ShapeError):
            makeGrid([np.zeros((4, 4, 3)), np.zeros((5, 4, 3))], 2)
