"""
Dense float32 tensors in NHWC layout and the operations the engine builds on.
"""

__all__ = ["Tensor", "core", "ops", "io"]

from .core import Tensor
from . import core, ops, io
