"""
Neural-network primitives over NHWC tensors.
"""

__all__ = [
    "Conv2dParams", "AttnParams", "LayerNormParams", "LinearParams",
    "conv2d", "transposed_depthwise_conv2d", "layer_norm", "gelu", "softmax",
    "linear", "attention", "mhsa", "bilinear_upsample", "intra_op_threads",
]

from .params import Conv2dParams, AttnParams, LayerNormParams, LinearParams
from .conv import conv2d, transposed_depthwise_conv2d
from .norm import layer_norm
from .activation import gelu, softmax
from .linear import linear
from .attention import attention, mhsa
from .resample import bilinear_upsample
from .parallel import intra_op_threads
