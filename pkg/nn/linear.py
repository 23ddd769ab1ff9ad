from exceptions import DimensionError
from tensor import Tensor
from .params import LinearParams


def linear(x: Tensor, p: LinearParams) -> Tensor:
    """Affine map over the last axis: [..., Cin] -> [..., Cout]."""
    cin = p.weight.shape[0]
    if x.shape[-1] != cin:
        raise DimensionError(
            f"linear expects last extent {cin}, got input {list(x.shape)} "
            f"and weight {list(p.weight.shape)}"
        )
    y = x.data @ p.weight.data
    if p.bias is not None:
        y = y + p.bias.data
    return Tensor.from_numpy(y)
