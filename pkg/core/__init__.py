"""
holovox core
============
A small channels-last tensor library with reverse-mode differentiation,
rigid-body volume resampling and normalization layers, on top of numpy.
"""

__version__ = "0.1.0"

from .common import *
from .tensor import *
