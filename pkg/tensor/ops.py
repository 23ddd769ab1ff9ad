"""Shape arithmetic and elementwise primitives. No broadcasting anywhere."""
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from exceptions import DimensionError
from .core import Tensor, require_rank


class ElementwiseOp(str, Enum):
    ADD = "add"
    MUL = "mul"


def matmul(a: Tensor, b: Tensor) -> Tensor:
    require_rank(a, 2, "matmul")
    require_rank(b, 2, "matmul")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"matmul inner extents differ: {list(a.shape)} x {list(b.shape)}"
        )
    return Tensor.from_numpy(a.data @ b.data)


def elementwise(a: Tensor, b: Tensor, op: ElementwiseOp) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(
            f"elementwise {ElementwiseOp(op).value} needs equal shapes: "
            f"{list(a.shape)} vs {list(b.shape)}"
        )
    if ElementwiseOp(op) is ElementwiseOp.ADD:
        return Tensor.from_numpy(a.data + b.data)
    return Tensor.from_numpy(a.data * b.data)


def add(a: Tensor, b: Tensor) -> Tensor:
    return elementwise(a, b, ElementwiseOp.ADD)


def mul(a: Tensor, b: Tensor) -> Tensor:
    return elementwise(a, b, ElementwiseOp.MUL)


def map_elements(x: Tensor, fn: Callable[[float], float]) -> Tensor:
    """Apply a scalar function to every element (ufuncs run vectorized)."""
    if isinstance(fn, np.ufunc):
        return Tensor.from_numpy(fn(x.data))
    vectorized = np.vectorize(fn, otypes=[np.float32])
    return Tensor.from_numpy(vectorized(x.data))


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape)) != x.size:
        raise DimensionError(f"cannot reshape {list(x.shape)} to {list(shape)}")
    return Tensor.from_numpy(x.data.reshape(shape))


def pad2d(x: Tensor, top: int, bottom: int, left: int, right: int, value: float = 0.0) -> Tensor:
    require_rank(x, 4, "pad2d")
    if min(top, bottom, left, right) < 0:
        raise DimensionError(f"pad counts must be >= 0, got {(top, bottom, left, right)}")
    if top == bottom == left == right == 0:
        return x
    padded = np.pad(
        x.data,
        ((0, 0), (top, bottom), (left, right), (0, 0)),
        mode="constant",
        constant_values=np.float32(value),
    )
    return Tensor.from_numpy(padded)


def crop2d(x: Tensor, top: int, bottom: int, left: int, right: int) -> Tensor:
    require_rank(x, 4, "crop2d")
    _, h, w, _ = x.shape
    if min(top, bottom, left, right) < 0 or top + bottom >= h or left + right >= w:
        raise DimensionError(
            f"crop {(top, bottom, left, right)} does not fit shape {list(x.shape)}"
        )
    return Tensor.from_numpy(x.data[:, top:h - bottom, left:w - right, :])
