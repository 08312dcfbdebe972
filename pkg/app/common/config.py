# coding:utf-8
from enum import Enum
from pathlib import Path
from typing import List

from core.common.config import (Config, ConfigItem, OptionsConfigItem, RangeConfigItem, BoolValidator,
                                OptionsValidator, RangeValidator, FolderValidator, EnumSerializer)
from core.common.exception_handler import ConfigError
from core.nn.geometry import PoseRange


class Primitive(Enum):
    """ Synthetic dataset primitive """

    CUBE = "cube"
    CHAIR = "chair"


class TrainConfig(Config):
    """ Config of a training run, every item is also a `train` flag """

    # model
    resolution = OptionsConfigItem(
        "Model", "resolution", 64, OptionsValidator([32, 64, 128]), help="output image size")
    latentDim = RangeConfigItem(
        "Model", "latent_dim", 128, RangeValidator(1), help="width of the latent code z")
    channelDivisor = RangeConfigItem(
        "Model", "channel_divisor", 1, RangeValidator(1, 64), help="divide every channel width by this")
    noRotation = ConfigItem(
        "Model", "no_rotation", False, BoolValidator(), help="train without random 3D transformations")
    traditionalZ = ConfigItem(
        "Model", "traditional_z", False, BoolValidator(),
        help="map z to the input tensor instead of a learnt constant, no AdaIN")

    # pose sampling, degrees
    azimuthMin = RangeConfigItem(
        "Pose", "azimuth_min", -50.0, RangeValidator(), help="lowest sampled azimuth")
    azimuthMax = RangeConfigItem(
        "Pose", "azimuth_max", 50.0, RangeValidator(), help="highest sampled azimuth")
    elevationMin = RangeConfigItem(
        "Pose", "elevation_min", -17.5, RangeValidator(), help="lowest sampled elevation")
    elevationMax = RangeConfigItem(
        "Pose", "elevation_max", 17.5, RangeValidator(), help="highest sampled elevation")
    scaleMin = RangeConfigItem("Pose", "scale_min", 0.9, RangeValidator(1e-3), help="lowest sampled scale")
    scaleMax = RangeConfigItem("Pose", "scale_max", 1.1, RangeValidator(1e-3), help="highest sampled scale")

    # loss weights
    lambdaIdentity = RangeConfigItem(
        "Loss", "lambda_identity", 1.0, RangeValidator(0.0), help="weight of the identity loss")
    lambdaStyle = RangeConfigItem(
        "Loss", "lambda_style", 1.0, RangeValidator(0.0), help="weight of the style losses")
    identityUpdatesD = ConfigItem(
        "Loss", "identity_updates_discriminator", True, BoolValidator(),
        help="also train the shared discriminator trunk with the identity loss")

    # optimizer
    lrG = RangeConfigItem("Optimizer", "lr_g", 2e-4, RangeValidator(0.0), help="generator learning rate")
    lrD = RangeConfigItem("Optimizer", "lr_d", 2e-4, RangeValidator(0.0), help="discriminator learning rate")
    beta1 = RangeConfigItem("Optimizer", "beta1", 0.5, RangeValidator(0.0, 0.999999), help="Adam beta1")
    beta2 = RangeConfigItem("Optimizer", "beta2", 0.999, RangeValidator(0.0, 0.999999), help="Adam beta2")
    eps = RangeConfigItem("Optimizer", "eps", 1e-8, RangeValidator(0.0), help="Adam epsilon")

    # run
    batchSize = RangeConfigItem("Run", "batch_size", 16, RangeValidator(2), help="images per step")
    steps = RangeConfigItem("Run", "steps", 2000, RangeValidator(1), help="number of training steps")
    seed = RangeConfigItem("Run", "seed", 0, RangeValidator(0), help="random seed")
    out = ConfigItem("Run", "out", "runs/default", FolderValidator(), help="output directory")
    logEvery = RangeConfigItem("Run", "log_every", 10, RangeValidator(1), help="steps between log lines")
    sampleEvery = RangeConfigItem(
        "Run", "sample_every", 250, RangeValidator(0), help="steps between sample grids, 0 disables")
    checkpointEvery = RangeConfigItem(
        "Run", "checkpoint_every", 500, RangeValidator(0), help="steps between checkpoints, 0 disables")

    # data
    dataset = ConfigItem("Data", "dataset", "synthetic", help="folder of PNG files or `synthetic`")
    syntheticPrimitive = OptionsConfigItem(
        "Data", "synthetic_primitive", Primitive.CHAIR, OptionsValidator(Primitive), EnumSerializer(Primitive),
        help="shape rendered by the synthetic dataset")
    syntheticItems = RangeConfigItem(
        "Data", "synthetic_items", 1024, RangeValidator(1), help="number of synthetic images")
    syntheticAzimuthSpan = RangeConfigItem(
        "Data", "synthetic_azimuth_span", 360.0, RangeValidator(0.0, 360.0),
        help="azimuth span of the synthetic renderings")

    def validate(self):
        """ cross-field checks, raises `ConfigError` """
        for name in ("azimuth", "elevation", "scale"):
            lo, hi = self.get(f"{name}_min"), self.get(f"{name}_max")
            if lo > hi:
                raise ConfigError(f"`{name}_min` = {lo} is greater than `{name}_max` = {hi}")

        return self

    @classmethod
    def fixedOnResume(cls) -> List[str]:
        """ keys a resumed run must keep: network and data definition plus the seed """
        return [item.name for item in cls.items() if item.group in ("Model", "Data")] + ["seed"]

    def poseRange(self) -> PoseRange:
        return PoseRange(self.azimuthMin, self.azimuthMax, self.elevationMin, self.elevationMax,
                         self.scaleMin, self.scaleMax)

    @property
    def isSynthetic(self):
        return self.dataset == SYNTHETIC

    @property
    def outDir(self) -> Path:
        return Path(self.out)


SYNTHETIC = "synthetic"
VERSION = "0.1.0"

CONFIG_FILE = "config.cfg"
LOSS_FILE = "loss.csv"
SAMPLE_DIR = "samples"
CHECKPOINT_DIR = "ckpt"
SAMPLE_NAME = "step_%08d.png"
CHECKPOINT_NAME = "step_%08d.hvox"
