"""EdgeViT variants: specs, parameter layout, initialization and the forward pass."""
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from exceptions import ConfigError, DimensionError, EdgeViTError, with_context
from lgl import LglBlockParams, LglConfig, ParamSpec, block_parameter_shapes, lgl_block
from models.schemas import VariantSpec, parse_config
from nn import (
    Conv2dParams, LayerNormParams, LinearParams, conv2d, intra_op_threads, layer_norm, linear,
)
from tensor import Tensor
from tensor.core import require_rank
from tensor.ops import pad2d
from .weight_store import WeightStore

logger = logging.getLogger(__name__)

VARIANTS: Dict[str, dict] = {
    "xxs": {"channels": [36, 72, 144, 288], "blocks": [1, 1, 3, 2], "heads": [1, 2, 4, 8]},
    "xs": {"channels": [48, 96, 240, 384], "blocks": [1, 1, 2, 2], "heads": [1, 2, 4, 8]},
    "s": {"channels": [48, 96, 240, 384], "blocks": [1, 2, 3, 2], "heads": [1, 2, 4, 8]},
}


def build_variant(name: Union[str, dict, VariantSpec], **overrides) -> VariantSpec:
    """Resolve a named variant (xxs, xs, s) or validate a custom spec."""
    if isinstance(name, str):
        key = name.lower().removeprefix("edgevit-")
        if key not in VARIANTS:
            raise ConfigError(f"unknown variant '{name}', expected one of {sorted(VARIANTS)}")
        data = {"name": key, **VARIANTS[key]}
    elif isinstance(name, VariantSpec):
        data = name.model_dump()
    else:
        data = dict(name)
    data.update(overrides)
    return parse_config(VariantSpec, data)


def load_spec(path: Union[str, Path]) -> VariantSpec:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"spec file {path} is not valid JSON: {e}") from e
    return build_variant(data)


def dump_spec(spec: VariantSpec, path: Union[str, Path]) -> None:
    Path(path).write_text(spec.model_dump_json(indent=2), encoding="utf-8")


def stage_configs(spec: VariantSpec) -> List[LglConfig]:
    return [
        LglConfig.for_stage(
            spec.lgl,
            channels=c,
            heads=h,
            sample_rate=r,
            local_branch=spec.dense_stage_local or r > 1,
        )
        for c, h, r in zip(spec.channels, spec.heads, spec.sample_rates)
    ]


def _downsampled(extent: int, k: int) -> int:
    return math.ceil(extent / k)


def stage_grids(spec: VariantSpec, input_size: Union[int, Tuple[int, int]]) -> List[Tuple[int, int]]:
    """(H, W) of every stage's token grid for a given input size."""
    h, w = (input_size, input_size) if isinstance(input_size, int) else input_size
    grids = []
    for i in range(4):
        k = spec.stem_kernel if i == 0 else spec.downsample_kernel
        h, w = _downsampled(h, k), _downsampled(w, k)
        grids.append((h, w))
    return grids


def parameter_shapes(spec: VariantSpec) -> Dict[str, ParamSpec]:
    table: Dict[str, ParamSpec] = {}
    cin = 3
    for i, (cfg, depth) in enumerate(zip(stage_configs(spec), spec.blocks), start=1):
        k = spec.stem_kernel if i == 1 else spec.downsample_kernel
        c = cfg.channels
        table[f"stage{i}.embed.weight"] = ParamSpec((k, k, cin, c), "weight", k * k * cin)
        table[f"stage{i}.embed.bias"] = ParamSpec((c,), "bias")
        for j in range(depth):
            table.update(block_parameter_shapes(cfg, f"stage{i}.block{j}"))
        cin = c
    table["head.norm.gamma"] = ParamSpec((cin,), "gamma")
    table["head.norm.beta"] = ParamSpec((cin,), "beta")
    table["head.fc.weight"] = ParamSpec((cin, spec.num_classes), "weight", cin)
    table["head.fc.bias"] = ParamSpec((spec.num_classes,), "bias")
    return table


def init_params(spec: VariantSpec, seed: int = 0) -> WeightStore:
    """Seeded weights: U(+-sqrt(1/fan_in)) for weights, zero biases, identity norms."""
    rng = np.random.default_rng(seed)
    store = WeightStore()
    for name, p in parameter_shapes(spec).items():
        if p.kind == "weight":
            bound = math.sqrt(1.0 / p.fan_in)
            data = rng.uniform(-bound, bound, size=p.shape).astype(np.float32)
        elif p.kind == "gamma":
            data = np.ones(p.shape, dtype=np.float32)
        else:
            data = np.zeros(p.shape, dtype=np.float32)
        store.add(name, Tensor.from_numpy(data))
    logger.info(f"Initialized {len(store)} parameters for EdgeViT-{spec.name} (seed={seed})")
    return store


class EdgeViTModel:
    """A variant bound to its weights. Immutable; forward is reentrant."""

    def __init__(self, spec: VariantSpec, weights: WeightStore, threads: int = 1):
        self.spec = spec
        self.threads = max(1, threads)
        self.configs = stage_configs(spec)
        self.embeds: List[Conv2dParams] = []
        self.blocks: List[List[Tuple[str, LglBlockParams]]] = []
        for i, (cfg, depth) in enumerate(zip(self.configs, spec.blocks), start=1):
            k = spec.stem_kernel if i == 1 else spec.downsample_kernel
            self.embeds.append(Conv2dParams(
                weight=weights.get(f"stage{i}.embed.weight"),
                bias=weights.get(f"stage{i}.embed.bias"),
                stride=(k, k),
            ))
            stage = []
            for j in range(depth):
                prefix = f"stage{i}.block{j}"
                try:
                    stage.append((prefix, LglBlockParams.from_store(weights, prefix, cfg)))
                except EdgeViTError as e:
                    raise with_context(e, prefix) from e
            self.blocks.append(stage)
        self.head_norm = LayerNormParams(
            gamma=weights.get("head.norm.gamma"), beta=weights.get("head.norm.beta")
        )
        self.head_fc = LinearParams(
            weight=weights.get("head.fc.weight"), bias=weights.get("head.fc.bias")
        )

    def _embed(self, x: Tensor, i: int) -> Tensor:
        kh, kw = self.embeds[i].kernel
        _, h, w, _ = x.shape
        x = pad2d(x, 0, -h % kh, 0, -w % kw)
        return conv2d(x, self.embeds[i])

    def forward_stages(self, x: Tensor) -> Tuple[List[Tensor], Tensor]:
        """Run one batch; returns every stage's output and the logits [N, num_classes]."""
        require_rank(x, 4, "forward")
        if x.shape[-1] != 3:
            raise DimensionError(f"expected an RGB input [N, H, W, 3], got {list(x.shape)}")
        stages = []
        for i, (cfg, blocks) in enumerate(zip(self.configs, self.blocks)):
            x = self._embed(x, i)
            for prefix, params in blocks:
                x = lgl_block(x, params, cfg, name=prefix)
            logger.debug(f"stage{i + 1}: {list(x.shape)}")
            stages.append(x)
        return stages, self.head(x)

    def head(self, x: Tensor) -> Tensor:
        pooled = layer_norm(x, self.head_norm).data.mean(axis=(1, 2))
        return linear(Tensor.from_numpy(pooled), self.head_fc)

    def forward(self, x: Tensor) -> Tensor:
        """Single samples spread convolution rows over `threads`; batches run one sample per worker."""
        require_rank(x, 4, "forward")
        if x.shape[0] == 1 or self.threads == 1:
            with intra_op_threads(self.threads):
                return self.forward_stages(x)[1]
        samples = [Tensor.from_numpy(x.data[i:i + 1]) for i in range(x.shape[0])]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            outputs = list(pool.map(lambda s: self.forward_stages(s)[1], samples))
        return Tensor.from_numpy(np.concatenate([o.data for o in outputs], axis=0))


def forward(spec: VariantSpec, weights: WeightStore, x: Tensor, threads: int = 1) -> Tensor:
    return EdgeViTModel(spec, weights, threads=threads).forward(x)


def random_input(input_size: int, seed: int, batch: int = 1) -> Tensor:
    rng = np.random.default_rng(seed)
    return Tensor.from_numpy(
        rng.standard_normal((batch, input_size, input_size, 3)).astype(np.float32)
    )
