from typing import Tuple

from exceptions import ConfigError
from models.schemas import Sampler
from tensor import Tensor
from tensor.core import require_rank
from tensor.ops import pad2d


def center_offset(r: int) -> int:
    # even r has no true center; ties go to the top-left
    return (r - 1) // 2


def pad_to_multiple(x: Tensor, r: int) -> Tuple[Tensor, Tuple[int, int]]:
    """Zero-pad bottom/right so H and W divide by r; returns the padded map and (pad_h, pad_w)."""
    _, h, w, _ = x.shape
    pad_h, pad_w = -h % r, -w % r
    return pad2d(x, 0, pad_h, 0, pad_w, 0.0), (pad_h, pad_w)


def sample_delegates(x: Tensor, r: int, sampler: Sampler = Sampler.CENTER) -> Tensor:
    """Pick one delegate token per r x r window: [N, H, W, C] -> [N, ceil(H/r), ceil(W/r), C]."""
    require_rank(x, 4, "sample_delegates")
    if r < 1:
        raise ConfigError(f"sample rate must be >= 1, got {r}")
    if r == 1:
        return x
    padded, _ = pad_to_multiple(x, r)
    n, h, w, c = padded.shape
    sampler = Sampler(sampler)
    if sampler is Sampler.CENTER:
        off = center_offset(r)
        return Tensor.from_numpy(padded.data[:, off::r, off::r, :])
    windows = padded.data.reshape(n, h // r, r, w // r, r, c)
    if sampler is Sampler.AVG:
        return Tensor.from_numpy(windows.mean(axis=(2, 4)))
    return Tensor.from_numpy(windows.max(axis=(2, 4)))
