from typing import Optional, Tuple

from exceptions import InternalConsistencyError, UnsupportedConfigurationError
from models.schemas import Propagation
from nn import bilinear_upsample, transposed_depthwise_conv2d
from tensor import Tensor
from tensor.core import require_rank
from tensor.ops import crop2d
from .config import LglConfig
from .params import LocalPropParams


def local_prop(
    d: Tensor,
    cfg: LglConfig,
    p: Optional[LocalPropParams] = None,
    out_hw: Optional[Tuple[int, int]] = None,
) -> Tensor:
    """Spread delegate tokens back over the full grid and crop any sampling padding."""
    require_rank(d, 4, "local_prop")
    r = cfg.sample_rate
    _, hd, wd, _ = d.shape
    out_h, out_w = out_hw if out_hw is not None else (hd * r, wd * r)

    if cfg.propagation is Propagation.TRANSPOSED_CONV:
        if p is None:
            raise UnsupportedConfigurationError("transposed-conv propagation needs local_prop weights")
        up = transposed_depthwise_conv2d(d, p.weight, p.bias, stride=r)
    elif cfg.propagation is Propagation.BILINEAR:
        up = bilinear_upsample(d, r)
    else:
        raise UnsupportedConfigurationError(
            "propagation 'none' has no upsampling; use attn_mode 'kv_downsampled'"
        )

    _, up_h, up_w, _ = up.shape
    pad_h, pad_w = up_h - out_h, up_w - out_w
    if pad_h < 0 or pad_w < 0 or pad_h >= r or pad_w >= r:
        raise InternalConsistencyError(
            f"propagated grid {up_h}x{up_w} cannot be cropped to {out_h}x{out_w} with r={r}"
        )
    if pad_h or pad_w:
        up = crop2d(up, 0, pad_h, 0, pad_w)
    return up
