"""Multi-head attention over token sequences [..., T, C]."""
import numpy as np

from exceptions import DimensionError
from tensor import Tensor
from .activation import softmax_array
from .params import AttnParams


def _project(tokens: np.ndarray, w: Tensor, b) -> np.ndarray:
    y = tokens @ w.data
    return y + b.data if b is not None else y


def _split_heads(t: np.ndarray, heads: int) -> np.ndarray:
    # [..., T, C] -> [..., heads, T, C/heads]
    *lead, length, c = t.shape
    return np.moveaxis(t.reshape(*lead, length, heads, c // heads), -2, -3)


def attention(q_tokens: Tensor, kv_tokens: Tensor, p: AttnParams) -> Tensor:
    """Queries from q_tokens, keys and values from kv_tokens.

    Per head: A = softmax(scale * Q K^T); the heads' A V are concatenated and projected by Wo.
    """
    c = p.channels
    for what, t in (("query", q_tokens), ("key/value", kv_tokens)):
        if t.rank < 2 or t.shape[-1] != c:
            raise DimensionError(f"attention {what} tokens must be [..., T, {c}], got {list(t.shape)}")
    if q_tokens.shape[:-2] != kv_tokens.shape[:-2]:
        raise DimensionError(
            f"attention batch extents differ: {list(q_tokens.shape)} vs {list(kv_tokens.shape)}"
        )
    if c % p.heads:
        raise DimensionError(f"channels {c} not divisible by heads {p.heads}")

    q = _split_heads(_project(q_tokens.data, p.wq, p.bq), p.heads)
    k = _split_heads(_project(kv_tokens.data, p.wk, p.bk), p.heads)
    v = _split_heads(_project(kv_tokens.data, p.wv, p.bv), p.heads)

    scores = (q @ np.swapaxes(k, -1, -2)) * np.float32(p.scale)
    weights = softmax_array(scores)
    context = weights @ v
    # [..., heads, T, d] -> [..., T, C]
    context = np.moveaxis(context, -3, -2)
    context = context.reshape(*context.shape[:-2], c)
    return Tensor.from_numpy(_project(context, p.wo, p.bo))


def mhsa(tokens: Tensor, p: AttnParams) -> Tensor:
    return attention(tokens, tokens, p)
