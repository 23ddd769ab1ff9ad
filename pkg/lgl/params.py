"""Parameter layout of an LGL block and its typed view over a weight store.

Names follow stage{i}.block{j}.{component}.{param}; the same table drives weight
initialization and parameter counting.
"""
from dataclasses import dataclass
from typing import Dict, Optional, Protocol, Tuple

from nn import AttnParams, Conv2dParams, LayerNormParams, LinearParams
from tensor import Tensor
from .config import LglConfig


class ParamSource(Protocol):
    def get(self, name: str) -> Tensor: ...


@dataclass(frozen=True)
class ParamSpec:
    shape: Tuple[int, ...]
    kind: str  # weight | bias | gamma | beta
    fan_in: int = 1

    @property
    def size(self) -> int:
        n = 1
        for extent in self.shape:
            n *= extent
        return n


def _conv(table, name, kh, kw, cin_g, cout):
    table[f"{name}.weight"] = ParamSpec((kh, kw, cin_g, cout), "weight", kh * kw * cin_g)
    table[f"{name}.bias"] = ParamSpec((cout,), "bias")


def _linear(table, name, cin, cout):
    table[f"{name}.weight"] = ParamSpec((cin, cout), "weight", cin)
    table[f"{name}.bias"] = ParamSpec((cout,), "bias")


def _norm(table, name, c):
    table[f"{name}.gamma"] = ParamSpec((c,), "gamma")
    table[f"{name}.beta"] = ParamSpec((c,), "beta")


def block_parameter_shapes(cfg: LglConfig, prefix: str) -> Dict[str, ParamSpec]:
    c, k, r = cfg.channels, cfg.local_kernel, cfg.sample_rate
    table: Dict[str, ParamSpec] = {}
    if cfg.local_branch:
        _conv(table, f"{prefix}.cpe1", 3, 3, 1, c)
        _norm(table, f"{prefix}.norm1", c)
        _conv(table, f"{prefix}.local_agg.pw1", 1, 1, c, c)
        _conv(table, f"{prefix}.local_agg.dw", k, k, 1, c)
        _conv(table, f"{prefix}.local_agg.pw2", 1, 1, c, c)
        _norm(table, f"{prefix}.norm2", c)
        _linear(table, f"{prefix}.ffn1.fc1", c, cfg.hidden)
        _linear(table, f"{prefix}.ffn1.fc2", cfg.hidden, c)
    if cfg.has_cpe2:
        _conv(table, f"{prefix}.cpe2", 3, 3, 1, c)
    _norm(table, f"{prefix}.norm3", c)
    for proj in ("q", "k", "v", "o"):
        _linear(table, f"{prefix}.attn.{proj}", c, c)
    if cfg.has_prop_weights:
        table[f"{prefix}.local_prop.weight"] = ParamSpec((r, r, c), "weight", r * r)
        table[f"{prefix}.local_prop.bias"] = ParamSpec((c,), "bias")
    _norm(table, f"{prefix}.norm4", c)
    if cfg.second_ffn == "ffn2":
        _linear(table, f"{prefix}.ffn2.fc1", c, cfg.hidden)
        _linear(table, f"{prefix}.ffn2.fc2", cfg.hidden, c)
    return table


@dataclass(frozen=True)
class LocalAggParams:
    pw1: Conv2dParams
    dw: Conv2dParams
    pw2: Conv2dParams


@dataclass(frozen=True)
class FfnParams:
    fc1: LinearParams
    fc2: LinearParams


@dataclass(frozen=True)
class LocalPropParams:
    weight: Tensor
    bias: Optional[Tensor] = None


def _read_conv(store: ParamSource, name: str, padding: int, groups: int) -> Conv2dParams:
    return Conv2dParams(
        weight=store.get(f"{name}.weight"),
        bias=store.get(f"{name}.bias"),
        padding=(padding, padding),
        groups=groups,
    )


def _read_norm(store: ParamSource, name: str) -> LayerNormParams:
    return LayerNormParams(gamma=store.get(f"{name}.gamma"), beta=store.get(f"{name}.beta"))


def _read_linear(store: ParamSource, name: str) -> LinearParams:
    return LinearParams(weight=store.get(f"{name}.weight"), bias=store.get(f"{name}.bias"))


def _read_ffn(store: ParamSource, name: str) -> FfnParams:
    return FfnParams(fc1=_read_linear(store, f"{name}.fc1"), fc2=_read_linear(store, f"{name}.fc2"))


@dataclass(frozen=True)
class LglBlockParams:
    norm3: LayerNormParams
    attn: AttnParams
    norm4: LayerNormParams
    ffn2: FfnParams
    cpe1: Optional[Conv2dParams] = None
    norm1: Optional[LayerNormParams] = None
    local_agg: Optional[LocalAggParams] = None
    norm2: Optional[LayerNormParams] = None
    ffn1: Optional[FfnParams] = None
    cpe2: Optional[Conv2dParams] = None
    local_prop: Optional[LocalPropParams] = None

    @classmethod
    def from_store(cls, store: ParamSource, prefix: str, cfg: LglConfig) -> "LglBlockParams":
        c = cfg.channels
        fields = {}
        if cfg.local_branch:
            fields["cpe1"] = _read_conv(store, f"{prefix}.cpe1", 1, c)
            fields["norm1"] = _read_norm(store, f"{prefix}.norm1")
            fields["local_agg"] = LocalAggParams(
                pw1=_read_conv(store, f"{prefix}.local_agg.pw1", 0, 1),
                dw=_read_conv(store, f"{prefix}.local_agg.dw", cfg.local_kernel // 2, c),
                pw2=_read_conv(store, f"{prefix}.local_agg.pw2", 0, 1),
            )
            fields["norm2"] = _read_norm(store, f"{prefix}.norm2")
            fields["ffn1"] = _read_ffn(store, f"{prefix}.ffn1")
        if cfg.has_cpe2:
            fields["cpe2"] = _read_conv(store, f"{prefix}.cpe2", 1, c)
        attn = {}
        for proj in ("q", "k", "v", "o"):
            attn[f"w{proj}"] = store.get(f"{prefix}.attn.{proj}.weight")
            attn[f"b{proj}"] = store.get(f"{prefix}.attn.{proj}.bias")
        fields["attn"] = AttnParams(heads=cfg.heads, **attn)
        if cfg.has_prop_weights:
            fields["local_prop"] = LocalPropParams(
                weight=store.get(f"{prefix}.local_prop.weight"),
                bias=store.get(f"{prefix}.local_prop.bias"),
            )
        fields["norm3"] = _read_norm(store, f"{prefix}.norm3")
        fields["norm4"] = _read_norm(store, f"{prefix}.norm4")
        fields["ffn2"] = _read_ffn(store, f"{prefix}.{cfg.second_ffn}")
        return cls(**fields)
