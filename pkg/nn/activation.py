import numpy as np
from scipy.special import erf

from tensor import Tensor

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def gelu(x: Tensor) -> Tensor:
    """Exact GeLU, x * Phi(x), using erf (no tanh approximation)."""
    data = x.data.astype(np.float64)
    return Tensor.from_numpy(0.5 * data * (1.0 + erf(data * _INV_SQRT2)))


def softmax_array(data: np.ndarray) -> np.ndarray:
    shifted = data - data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax(x: Tensor) -> Tensor:
    """Max-subtracted softmax over the last axis."""
    return Tensor.from_numpy(softmax_array(x.data))
