"""The LGL bottleneck.

    x0   = cpe1(x_in)
    X    = LocalAgg(Norm(x0)) + x0
    X'   = FFN(Norm(X)) + X
    x1   = cpe2(X')
    Z    = LocalProp(GlobalSparseAttn(Norm(x1))) + x1
    Xout = FFN(Norm(Z)) + Z
"""
import logging
from typing import Optional

from exceptions import DimensionError, EdgeViTError, with_context
from models.schemas import AttnMode
from nn import AttnParams, Conv2dParams, attention, conv2d, gelu, layer_norm, linear, mhsa
from tensor import Tensor
from tensor.core import require_rank
from tensor.ops import add, reshape
from .config import LglConfig
from .params import FfnParams, LglBlockParams, LocalAggParams, LocalPropParams
from .propagation import local_prop
from .sampling import sample_delegates

logger = logging.getLogger(__name__)


def cpe(x: Tensor, p: Conv2dParams) -> Tensor:
    """Conditional positional encoding: x + depthwise3x3(x)."""
    return add(conv2d(x, p), x)


def local_agg(x: Tensor, p: LocalAggParams) -> Tensor:
    # residual is added by the caller
    return conv2d(conv2d(conv2d(x, p.pw1), p.dw), p.pw2)


def ffn(tokens: Tensor, p: FfnParams) -> Tensor:
    return linear(gelu(linear(tokens, p.fc1)), p.fc2)


def _tokens(x: Tensor) -> Tensor:
    n, h, w, c = x.shape
    return reshape(x, (n, h * w, c))


def global_sparse_attn(x: Tensor, cfg: LglConfig, p: AttnParams) -> Tensor:
    """MHSA over the delegate tokens only; returns the delegate grid."""
    d = sample_delegates(x, cfg.sample_rate, cfg.sampler)
    n, hd, wd, c = d.shape
    out = mhsa(_tokens(d), p)
    return reshape(out, (n, hd, wd, c))


def kv_downsampled_attn(x: Tensor, cfg: LglConfig, p: AttnParams) -> Tensor:
    """Every grid position queries; keys and values come from the sampled delegates."""
    n, h, w, c = x.shape
    d = sample_delegates(x, cfg.sample_rate, cfg.sampler)
    out = attention(_tokens(x), _tokens(d), p)
    return reshape(out, (n, h, w, c))


def global_branch(
    x: Tensor, cfg: LglConfig, attn: AttnParams, prop: Optional[LocalPropParams] = None
) -> Tensor:
    _, h, w, _ = x.shape
    if cfg.attn_mode is AttnMode.KV_DOWNSAMPLED:
        return kv_downsampled_attn(x, cfg, attn)
    return local_prop(global_sparse_attn(x, cfg, attn), cfg, prop, out_hw=(h, w))


def lgl_block(
    x_in: Tensor, params: LglBlockParams, cfg: LglConfig, name: Optional[str] = None
) -> Tensor:
    try:
        require_rank(x_in, 4, "lgl_block")
        if x_in.shape[-1] != cfg.channels:
            raise DimensionError(
                f"block configured for {cfg.channels} channels got input {list(x_in.shape)}"
            )
        x = x_in
        if cfg.local_branch:
            x = cpe(x, params.cpe1)
            x = add(local_agg(layer_norm(x, params.norm1), params.local_agg), x)
            x = add(ffn(layer_norm(x, params.norm2), params.ffn1), x)
        if cfg.has_cpe2:
            x = cpe(x, params.cpe2)
        z = add(global_branch(layer_norm(x, params.norm3), cfg, params.attn, params.local_prop), x)
        out = add(ffn(layer_norm(z, params.norm4), params.ffn2), z)
    except EdgeViTError as e:
        if name is None:
            raise
        raise with_context(e, name) from e
    logger.debug(f"{name or 'lgl_block'}: {list(x_in.shape)} -> {list(out.shape)}")
    return out
