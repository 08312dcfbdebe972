# coding:utf-8
"""
Poses and rigid-body resampling of channels-last feature volumes.

Volumes are `[N, H, W, D, C]`. Array axis 1 is y (rows), axis 2 is x
(columns) and axis 3 is z (depth); coordinates are centred on the volume
midpoint. Grids hold source coordinates in array-axis order.
"""
import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
from scipy import sparse

from ..common.exception_handler import ContractError, ShapeError
from ..tensor.tensor import Function, Tensor


@dataclass(frozen=True)
class Pose:
    """ azimuth/elevation in degrees, unitless scale, translation in voxels (x, y, z) """

    azimuth: float = 0.0
    elevation: float = 0.0
    scale: float = 1.0
    translation: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (math.isfinite(self.azimuth) and math.isfinite(self.elevation)):
            raise ContractError(f"pose angles must be finite, got {self.azimuth}, {self.elevation}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ContractError(f"pose scale must be > 0, got {self.scale}")
        if len(self.translation) != 3:
            raise ContractError("pose translation must be a 3-vector")

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @property
    def is_identity(self):
        return (self.azimuth == 0 and self.elevation == 0 and self.scale == 1
                and not any(self.translation))


@dataclass(frozen=True)
class PoseRange:
    """ uniform sampling box for poses, angles in degrees """

    azimuth_min: float = -50.0
    azimuth_max: float = 50.0
    elevation_min: float = -17.5
    elevation_max: float = 17.5
    scale_min: float = 0.9
    scale_max: float = 1.1

    def __post_init__(self):
        for name in ("azimuth", "elevation", "scale"):
            lo, hi = getattr(self, name + "_min"), getattr(self, name + "_max")
            if lo > hi:
                raise ContractError(f"pose range {name}: min {lo} > max {hi}")
        if self.scale_min <= 0:
            raise ContractError(f"pose range scale must be > 0, got {self.scale_min}")

    def midpoint(self) -> Pose:
        return Pose((self.azimuth_min + self.azimuth_max) / 2,
                    (self.elevation_min + self.elevation_max) / 2,
                    (self.scale_min + self.scale_max) / 2)


def rotation_matrix(pose: Pose) -> np.ndarray:
    """ R = R_y(azimuth) @ R_x(elevation), right-handed, det 1 """
    a = math.radians(pose.azimuth)
    e = math.radians(pose.elevation)
    ca, sa = math.cos(a), math.sin(a)
    ce, se = math.cos(e), math.sin(e)
    ry = np.array([[ca, 0.0, sa],
                   [0.0, 1.0, 0.0],
                   [-sa, 0.0, ca]])
    rx = np.array([[1.0, 0.0, 0.0],
                   [0.0, ce, -se],
                   [0.0, se, ce]])
    return ry @ rx


def build_grid(extents: Sequence[int], pose: Pose) -> Tensor:
    """ source coordinates `[H, W, D, 3]` for inverse warping by `pose`

    Each output voxel centre p (xyz, relative to the volume midpoint) samples
    s = R^T (p - t) / scale, so the content appears rotated by +pose.
    """
    extents = tuple(int(n) for n in extents)
    if len(extents) != 3 or min(extents) < 2:
        raise ShapeError(f"build_grid: need three extents >= 2, got {extents}")

    h, w, d = extents
    cy, cx, cz = (h - 1) / 2.0, (w - 1) / 2.0, (d - 1) / 2.0
    rows, cols, deps = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64),
                                   np.arange(d, dtype=np.float64), indexing="ij")
    p = np.stack([cols - cx, rows - cy, deps - cz], axis=-1)
    if not pose.is_identity:
        # row vectors: v @ R == (R^T v)^T
        p = (p - np.asarray(pose.translation, dtype=np.float64)) @ rotation_matrix(pose) / pose.scale

    grid = np.stack([p[..., 1] + cy, p[..., 0] + cx, p[..., 2] + cz], axis=-1)
    return Tensor(grid, dtype=np.float64)


def interpolation_matrix(grid: np.ndarray, extents: Tuple[int, int, int], dtype=np.float64) -> sparse.csr_matrix:
    """ sparse `[P_out, P_in]` trilinear weights; out-of-volume corners are dropped """
    h, w, d = extents
    coords = grid.reshape(-1, 3)
    base = np.floor(coords)
    frac = coords - base
    base = base.astype(np.int64)
    rows = np.arange(coords.shape[0])

    data, ri, ci = [], [], []
    for corner in np.ndindex(2, 2, 2):
        idx = base + np.asarray(corner)
        weight = np.prod(np.where(np.asarray(corner, dtype=bool), frac, 1.0 - frac), axis=1)
        keep = ((idx >= 0) & (idx < np.asarray(extents))).all(axis=1) & (weight != 0)
        data.append(weight[keep])
        ri.append(rows[keep])
        ci.append((idx[keep, 0] * w + idx[keep, 1]) * d + idx[keep, 2])

    return sparse.csr_matrix(
        (np.concatenate(data).astype(dtype), (np.concatenate(ri), np.concatenate(ci))),
        shape=(coords.shape[0], h * w * d))


class TrilinearResample(Function):
    """ blend of the 8 lattice neighbours of each source coordinate

    Differentiable w.r.t. the volume only; the grid is a constant.
    """

    def forward(self, volume, grid=None):
        n, c = volume.shape[0], volume.shape[-1]
        extents = volume.shape[1:4]
        grids = grid if grid.ndim == 5 else [grid]
        self.mats = [interpolation_matrix(g, extents, volume.dtype) for g in grids]
        self.shared = grid.ndim == 4
        self.in_shape = volume.shape
        out_sp = grid.shape[-4:-1]

        flat = volume.reshape(n, -1, c)
        if self.shared:
            # fold the batch into columns: one sparse product for all instances
            cols = flat.transpose(1, 0, 2).reshape(flat.shape[1], n * c)
            out = (self.mats[0] @ cols).reshape(-1, n, c).transpose(1, 0, 2)
        else:
            out = np.stack([m @ flat[i] for i, m in enumerate(self.mats)])

        return np.ascontiguousarray(out.reshape((n,) + out_sp + (c,)), dtype=volume.dtype)

    def backward(self, grad):
        n, c = grad.shape[0], grad.shape[-1]
        flat = grad.reshape(n, -1, c)
        if self.shared:
            cols = flat.transpose(1, 0, 2).reshape(flat.shape[1], n * c)
            g = (self.mats[0].T @ cols).reshape(-1, n, c).transpose(1, 0, 2)
        else:
            g = np.stack([m.T @ flat[i] for i, m in enumerate(self.mats)])

        return np.ascontiguousarray(g.reshape(self.in_shape), dtype=grad.dtype),


def trilinear_resample(volume: Tensor, grid) -> Tensor:
    """ resample `[N, H, W, D, C]` at `grid` (`[H', W', D', 3]` or `[N, H', W', D', 3]`) """
    grid = np.asarray(grid.data if isinstance(grid, Tensor) else grid, dtype=np.float64)
    if volume.ndim != 5:
        raise ShapeError(f"trilinear_resample: volume must be [N, H, W, D, C], got {volume.shape}")
    if grid.shape[-1] != 3 or grid.ndim not in (4, 5):
        raise ShapeError(f"trilinear_resample: grid must end in 3 coordinates, got {grid.shape}")
    if grid.ndim == 5 and grid.shape[0] != volume.shape[0]:
        raise ShapeError(f"trilinear_resample: {grid.shape[0]} grids for a batch of {volume.shape[0]}")

    return TrilinearResample.apply(volume, grid=grid)


def rigid_transform(volume: Tensor, pose) -> Tensor:
    """ rotate/scale/translate a volume by one pose or a list of per-instance poses """
    extents = volume.shape[1:4]
    if isinstance(pose, Pose):
        if pose.is_identity:
            return volume
        return trilinear_resample(volume, build_grid(extents, pose))

    poses = list(pose)
    if len(poses) != volume.shape[0]:
        raise ShapeError(f"rigid_transform: {len(poses)} poses for a batch of {volume.shape[0]}")
    if all(p.is_identity for p in poses):
        return volume

    grids = np.stack([build_grid(extents, p).data for p in poses])
    return trilinear_resample(volume, grids)
