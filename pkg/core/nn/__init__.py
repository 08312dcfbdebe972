from .geometry import (Pose, PoseRange, rotation_matrix, build_grid, interpolation_matrix,
                       trilinear_resample, rigid_transform)
from .layers import (ParameterStore, Dense, Conv, dense, per_channel, instance_stats, instance_norm,
                     StyleParams, adain, MappingNetwork, map_style, SpectralNorm, spectral_normalize)
