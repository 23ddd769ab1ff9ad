"""Convolutions over NHWC maps.

Two evaluation strategies share one contract: "direct" accumulates one kernel tap at a
time (the verification mode), "im2col" gathers sliding windows and contracts them in one
einsum. They agree within 1e-5.
"""
import logging
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from config import settings
from exceptions import DimensionError, UnsupportedConfigurationError
from tensor import Tensor
from tensor.core import require_rank
from .parallel import map_row_bands
from .params import Conv2dParams

logger = logging.getLogger(__name__)


def conv2d(x: Tensor, p: Conv2dParams, method: Optional[str] = None) -> Tensor:
    require_rank(x, 4, "conv2d")
    n, h, w, c = x.shape
    kh, kw = p.kernel
    sh, sw = p.stride
    ph, pw = p.padding
    g = p.groups
    if c != p.in_channels:
        raise DimensionError(
            f"conv2d input has {c} channels, weight {list(p.weight.shape)} with "
            f"groups={g} expects {p.in_channels}"
        )
    if h + 2 * ph < kh or w + 2 * pw < kw:
        raise DimensionError(
            f"kernel {kh}x{kw} larger than padded input {h + 2 * ph}x{w + 2 * pw}"
        )
    hout = (h + 2 * ph - kh) // sh + 1
    wout = (w + 2 * pw - kw) // sw + 1
    cin_g = c // g
    cout_g = p.out_channels // g

    xp = np.pad(x.data, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
    # [kh, kw, cin_g, g, cout_g]: output channels are group-major
    wt = p.weight.data.reshape(kh, kw, cin_g, g, cout_g)

    method = method or settings.CONV_METHOD
    kernels = {"direct": _conv_direct, "im2col": _conv_im2col}
    if method not in kernels:
        raise UnsupportedConfigurationError(f"unknown convolution method '{method}'")
    kernel = kernels[method]

    def band(start: int, stop: int) -> np.ndarray:
        # output rows [start, stop) read padded rows [start*sh, (stop-1)*sh + kh)
        rows = xp[:, start * sh:(stop - 1) * sh + kh]
        return kernel(rows, wt, stop - start, wout, (sh, sw), g)

    out = map_row_bands(band, hout).reshape(n, hout, wout, p.out_channels)
    if p.bias is not None:
        out = out + p.bias.data
    return Tensor.from_numpy(out.astype(np.float32, copy=False))


def _conv_direct(xp, wt, hout, wout, stride, groups):
    n = xp.shape[0]
    kh, kw, cin_g, _, cout_g = wt.shape
    sh, sw = stride
    xg = xp.reshape(n, xp.shape[1], xp.shape[2], groups, cin_g)
    out = np.zeros((n, hout, wout, groups, cout_g), dtype=np.float32)
    for i in range(kh):
        for j in range(kw):
            patch = xg[:, i:i + sh * (hout - 1) + 1:sh, j:j + sw * (wout - 1) + 1:sw]
            out += np.einsum("nhwgi,igo->nhwgo", patch, wt[i, j])
    return out


def _conv_im2col(xp, wt, hout, wout, stride, groups):
    n = xp.shape[0]
    kh, kw, cin_g, _, _ = wt.shape
    sh, sw = stride
    # [n, H', W', c, kh, kw]
    windows = sliding_window_view(xp, (kh, kw), axis=(1, 2))
    windows = windows[:, ::sh, ::sw][:, :hout, :wout]
    windows = windows.reshape(n, hout, wout, groups, cin_g, kh, kw)
    return np.einsum("nhwgikl,kligo->nhwgo", windows, wt, optimize=True)


def transposed_depthwise_conv2d(
    x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, stride: int = 1
) -> Tensor:
    """Depthwise transposed conv with kernel == stride == r.

    The r x r output blocks are disjoint, so out[i, j, c] = x[i // r, j // r, c] *
    w[i % r, j % r, c] + bias[c].
    """
    require_rank(x, 4, "transposed_depthwise_conv2d")
    if weight.rank != 3:
        raise DimensionError(
            f"transposed depthwise weight must be [r, r, C], got {list(weight.shape)}"
        )
    r, r2, c = weight.shape
    if r != r2 or r != stride:
        raise UnsupportedConfigurationError(
            f"transposed conv needs kernel == stride, got kernel {r}x{r2} stride {stride}"
        )
    n, h, w, cx = x.shape
    if cx != c:
        raise DimensionError(f"input has {cx} channels, weight {list(weight.shape)} expects {c}")
    if bias is not None and bias.shape != (c,):
        raise DimensionError(f"transposed conv bias must be [{c}], got {list(bias.shape)}")

    # [n, h, 1, w, 1, c] * [1, 1, r, 1, r, c] -> [n, h, r, w, r, c]
    blocks = x.data[:, :, None, :, None, :] * weight.data.reshape(1, 1, r, 1, r, c)
    out = blocks.reshape(n, h * r, w * r, c)
    if bias is not None:
        out = out + bias.data
    return Tensor.from_numpy(out)
