# coding:utf-8
from typing import List

import numpy as np

from core.common.exception_handler import ContractError
from core.nn.geometry import Pose, PoseRange
from core.tensor.tensor import Tensor, get_default_dtype


def sample_latent(rng: np.random.Generator, d: int, n: int = 1) -> Tensor:
    """ `[n, d]` codes, i.i.d. uniform on [-1, 1] """
    if d < 1 or n < 1:
        raise ContractError(f"sample_latent: need d >= 1 and n >= 1, got d={d}, n={n}")

    return Tensor(rng.uniform(-1.0, 1.0, size=(n, d)), dtype=get_default_dtype())


def sample_pose(rng: np.random.Generator, poseRange: PoseRange) -> Pose:
    """ each component uniform in its interval, a degenerate interval gives its bound """
    r = poseRange
    azimuth, elevation, scale = rng.uniform(
        [r.azimuth_min, r.elevation_min, r.scale_min], [r.azimuth_max, r.elevation_max, r.scale_max])
    return Pose(float(azimuth), float(elevation), float(scale))


def sample_poses(rng: np.random.Generator, poseRange: PoseRange, n: int) -> List[Pose]:
    return [sample_pose(rng, poseRange) for _ in range(n)]


def sweep_angles(low: float, high: float, k: int) -> np.ndarray:
    """ `k` evenly spaced angles over [low, high]

    One angle is the midpoint. A full turn leaves out the end point, which
    would repeat the start.
    """
    if k < 1:
        raise ContractError(f"sweep needs at least one step, got {k}")
    if k == 1:
        return np.array([(low + high) / 2.0])
    if np.isclose(high - low, 360.0):
        return low + 360.0 * np.arange(k) / k

    return np.linspace(low, high, k)
