from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from exceptions import DimensionError

ArrayLike = Union[np.ndarray, Sequence, float]


class Tensor:
    """Immutable row-major float32 tensor.

    Feature maps are (N, H, W, C) with channels innermost, so element (n, h, w, c)
    sits at flat index ((n*H + h)*W + w)*C + c. Weights may have any rank.
    """

    __slots__ = ("_data",)

    def __init__(self, data: ArrayLike, shape: Iterable[int] = None):
        arr = np.array(data, dtype=np.float32, order="C", copy=True)
        if shape is not None:
            shape = tuple(int(s) for s in shape)
            if int(np.prod(shape)) != arr.size:
                raise DimensionError(
                    f"cannot view {arr.size} values as shape {list(shape)}"
                )
            arr = arr.reshape(shape)
        self._data = _freeze(arr)

    @classmethod
    def from_numpy(cls, arr: np.ndarray) -> "Tensor":
        """Wrap a freshly computed array without copying it when it is already float32."""
        tensor = cls.__new__(cls)
        tensor._data = _freeze(np.require(arr, np.float32, "C"))
        return tensor

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> Tuple[int, ...]:
        return self._data.shape

    @property
    def rank(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return self._data.size

    def numpy(self) -> np.ndarray:
        return self._data.copy()

    def flat(self) -> np.ndarray:
        return self._data.reshape(-1)

    def __len__(self) -> int:
        return self._data.shape[0]

    def __repr__(self) -> str:
        return f"Tensor(shape={list(self.shape)})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Tensor):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._data, other._data))

    __hash__ = None


def _freeze(arr: np.ndarray) -> np.ndarray:
    if any(extent < 1 for extent in arr.shape):
        raise DimensionError(f"all extents must be >= 1, got {list(arr.shape)}")
    arr.setflags(write=False)
    return arr


def zeros(shape: Sequence[int]) -> Tensor:
    return Tensor.from_numpy(np.zeros(tuple(shape), dtype=np.float32))


def full(shape: Sequence[int], value: float) -> Tensor:
    return Tensor.from_numpy(np.full(tuple(shape), value, dtype=np.float32))


def require_rank(x: Tensor, rank: int, what: str) -> None:
    if x.rank != rank:
        raise DimensionError(f"{what} expects rank {rank}, got shape {list(x.shape)}")
