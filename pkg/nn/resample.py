from typing import Optional, Tuple

import numpy as np

from exceptions import ArgumentError
from tensor import Tensor
from tensor.core import require_rank


def _axis_weights(size_in: int, size_out: int, r: int):
    # align-corners-false: sample at (i + 0.5) / r - 0.5, clamped to the input range
    src = (np.arange(size_out, dtype=np.float64) + 0.5) / r - 0.5
    src = np.clip(src, 0.0, size_in - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, size_in - 1)
    frac = (src - lo).astype(np.float32)
    return lo, hi, frac


def bilinear_upsample(x: Tensor, r: int, out_hw: Optional[Tuple[int, int]] = None) -> Tensor:
    """Upsample an NHWC map by an integer factor r."""
    require_rank(x, 4, "bilinear_upsample")
    if r < 1:
        raise ArgumentError(f"upsample factor must be >= 1, got {r}")
    _, h, w, _ = x.shape
    h_out, w_out = out_hw if out_hw is not None else (h * r, w * r)

    lo, hi, frac = _axis_weights(h, h_out, r)
    f = frac[None, :, None, None]
    rows = x.data[:, lo] + (x.data[:, hi] - x.data[:, lo]) * f

    lo, hi, frac = _axis_weights(w, w_out, r)
    f = frac[None, None, :, None]
    out = rows[:, :, lo] + (rows[:, :, hi] - rows[:, :, lo]) * f
    return Tensor.from_numpy(out)
