"""Parameter holders. Shapes are checked once at construction."""
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

from config import settings
from exceptions import DimensionError
from tensor import Tensor


def _check_bias(bias: Optional[Tensor], extent: int, what: str) -> None:
    if bias is not None and bias.shape != (extent,):
        raise DimensionError(f"{what} bias must be [{extent}], got {list(bias.shape)}")


@dataclass(frozen=True)
class Conv2dParams:
    """weight is [kh, kw, Cin/groups, Cout]; groups == Cin is depthwise."""

    weight: Tensor
    bias: Optional[Tensor] = None
    stride: Tuple[int, int] = (1, 1)
    padding: Tuple[int, int] = (0, 0)
    groups: int = 1

    def __post_init__(self):
        if self.weight.rank != 4:
            raise DimensionError(f"conv weight must be rank 4, got {list(self.weight.shape)}")
        if min(self.stride) < 1:
            raise DimensionError(f"conv stride must be >= 1, got {self.stride}")
        if min(self.padding) < 0:
            raise DimensionError(f"conv padding must be >= 0, got {self.padding}")
        if self.groups < 1 or self.out_channels % self.groups:
            raise DimensionError(
                f"Cout={self.out_channels} is not divisible by groups={self.groups}"
            )
        _check_bias(self.bias, self.out_channels, "conv")

    @property
    def kernel(self) -> Tuple[int, int]:
        return self.weight.shape[0], self.weight.shape[1]

    @property
    def in_channels(self) -> int:
        return self.weight.shape[2] * self.groups

    @property
    def out_channels(self) -> int:
        return self.weight.shape[3]


@dataclass(frozen=True)
class LinearParams:
    """weight is [Cin, Cout]."""

    weight: Tensor
    bias: Optional[Tensor] = None

    def __post_init__(self):
        if self.weight.rank != 2:
            raise DimensionError(f"linear weight must be rank 2, got {list(self.weight.shape)}")
        _check_bias(self.bias, self.weight.shape[1], "linear")


@dataclass(frozen=True)
class LayerNormParams:
    gamma: Tensor
    beta: Tensor
    epsilon: float = field(default_factory=lambda: settings.LAYERNORM_EPS)

    def __post_init__(self):
        if self.gamma.rank != 1 or self.gamma.shape != self.beta.shape:
            raise DimensionError(
                f"layer norm gamma/beta must be equal rank-1 shapes, got "
                f"{list(self.gamma.shape)} and {list(self.beta.shape)}"
            )
        if not self.epsilon > 0:
            raise DimensionError(f"layer norm epsilon must be > 0, got {self.epsilon}")


@dataclass(frozen=True)
class AttnParams:
    """Q/K/V/O projections, each [C, C], with optional [C] biases."""

    wq: Tensor
    wk: Tensor
    wv: Tensor
    wo: Tensor
    heads: int = 1
    bq: Optional[Tensor] = None
    bk: Optional[Tensor] = None
    bv: Optional[Tensor] = None
    bo: Optional[Tensor] = None

    def __post_init__(self):
        c = self.channels
        for name in ("wq", "wk", "wv", "wo"):
            w = getattr(self, name)
            if w.shape != (c, c):
                raise DimensionError(f"attention {name} must be [{c}, {c}], got {list(w.shape)}")
        for name in ("bq", "bk", "bv", "bo"):
            _check_bias(getattr(self, name), c, f"attention {name}")
        if self.heads < 1 or c % self.heads:
            raise DimensionError(f"channels {c} not divisible by heads {self.heads}")

    @property
    def channels(self) -> int:
        return self.wq.shape[0]

    @property
    def head_dim(self) -> int:
        return self.channels // self.heads

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(self.head_dim)
