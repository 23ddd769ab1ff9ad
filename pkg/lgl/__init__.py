"""
Local-Global-Local bottleneck: local aggregation, sparse delegate attention,
local propagation, FFNs and conditional positional encoding.
"""

__all__ = [
    "LglConfig", "LglBlockParams", "ParamSpec", "block_parameter_shapes",
    "sample_delegates", "local_prop", "cpe", "local_agg", "ffn",
    "global_sparse_attn", "kv_downsampled_attn", "global_branch", "lgl_block",
]

from .config import LglConfig
from .params import LglBlockParams, ParamSpec, block_parameter_shapes
from .sampling import sample_delegates
from .propagation import local_prop
from .block import (
    cpe, local_agg, ffn, global_sparse_attn, kv_downsampled_attn, global_branch, lgl_block,
)
