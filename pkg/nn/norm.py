import numpy as np

from exceptions import DimensionError
from tensor import Tensor
from .params import LayerNormParams


def layer_norm(x: Tensor, p: LayerNormParams) -> Tensor:
    """Normalize every token over the channel (last) axis with population variance."""
    c = x.shape[-1]
    if p.gamma.shape != (c,):
        raise DimensionError(f"layer norm over {c} channels given gamma {list(p.gamma.shape)}")
    data = x.data
    mean = data.mean(axis=-1, keepdims=True)
    centered = data - mean
    var = (centered * centered).mean(axis=-1, keepdims=True)
    y = centered / np.sqrt(var + np.float32(p.epsilon))
    return Tensor.from_numpy(y * p.gamma.data + p.beta.data)
