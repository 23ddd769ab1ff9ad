"""Parameter and multiply-add accounting, the LGL complexity terms and the efficiency metric.

One MAC counts as one FLOP. Convolutions cost kh*kw*(Cin/groups)*Cout*Hout*Wout, a linear
layer over T tokens costs T*Cin*Cout, and attention splits into its projections plus a
`.attn.scores` row holding the score and weighted-sum products. Biases, norms, GeLU,
softmax, bilinear interpolation and delegate sampling count zero.
"""
import logging
import math
from collections import OrderedDict
from typing import Iterable, List, Optional, Tuple

from exceptions import ArgumentError, DomainError
from lgl import LglConfig, block_parameter_shapes
from models.schemas import (
    AttnMode,
    CostReport,
    CostRow,
    EfficiencyEntry,
    LglCostTerms,
    RankedEntry,
    VariantSpec,
)
from .model_service import parameter_shapes, stage_configs, stage_grids

logger = logging.getLogger(__name__)

# (name, top-1 %, energy mJ, reported efficiency) measured on a mobile CPU
REFERENCE_EFFICIENCY = [
    ("MobileNet-v3 1.0", 73.3, 63.0, 1.164),
    ("MobileNet-v2 1.4", 72.0, 85.7, 0.841),
    ("EfficientNet-B0", 77.1, 159.0, 0.485),
    ("MobileViT-XS", 70.5, 91.7, 0.769),
    ("EdgeViT-XXS", 74.4, 127.4, 0.584),
]


def module_path(param_name: str) -> str:
    return param_name.rsplit(".", 1)[0]


def count_params(spec: VariantSpec) -> CostReport:
    rows = [CostRow(path=name, params=p.size) for name, p in parameter_shapes(spec).items()]
    return CostReport.from_rows(spec.name, None, rows)


def conv_macs(kh: int, kw: int, cin: int, cout: int, hout: int, wout: int, groups: int = 1) -> int:
    return kh * kw * (cin // groups) * cout * hout * wout


def linear_macs(tokens: int, cin: int, cout: int) -> int:
    return tokens * cin * cout


def block_macs(cfg: LglConfig, h: int, w: int, prefix: str) -> List[CostRow]:
    """MAC rows of one LGL block running on an h x w grid."""
    c, k, r = cfg.channels, cfg.local_kernel, cfg.sample_rate
    t = h * w
    td = math.ceil(h / r) * math.ceil(w / r)
    rows: List[Tuple[str, int]] = []
    if cfg.has_cpe1:
        rows.append((f"{prefix}.cpe1", conv_macs(3, 3, c, c, h, w, groups=c)))
    if cfg.local_branch:
        rows += [
            (f"{prefix}.local_agg.pw1", conv_macs(1, 1, c, c, h, w)),
            (f"{prefix}.local_agg.dw", conv_macs(k, k, c, c, h, w, groups=c)),
            (f"{prefix}.local_agg.pw2", conv_macs(1, 1, c, c, h, w)),
            (f"{prefix}.ffn1.fc1", linear_macs(t, c, cfg.hidden)),
            (f"{prefix}.ffn1.fc2", linear_macs(t, cfg.hidden, c)),
        ]
    if cfg.has_cpe2:
        rows.append((f"{prefix}.cpe2", conv_macs(3, 3, c, c, h, w, groups=c)))
    if cfg.attn_mode is AttnMode.KV_DOWNSAMPLED:
        rows += [
            (f"{prefix}.attn.q", linear_macs(t, c, c)),
            (f"{prefix}.attn.k", linear_macs(td, c, c)),
            (f"{prefix}.attn.v", linear_macs(td, c, c)),
            (f"{prefix}.attn.scores", 2 * t * td * c),
            (f"{prefix}.attn.o", linear_macs(t, c, c)),
        ]
    else:
        rows += [(f"{prefix}.attn.{proj}", linear_macs(td, c, c)) for proj in ("q", "k", "v")]
        rows += [
            (f"{prefix}.attn.scores", 2 * td * td * c),
            (f"{prefix}.attn.o", linear_macs(td, c, c)),
        ]
        if cfg.has_prop_weights:
            rows.append((f"{prefix}.local_prop", r * r * c * td))
    rows += [
        (f"{prefix}.ffn2.fc1", linear_macs(t, c, cfg.hidden)),
        (f"{prefix}.ffn2.fc2", linear_macs(t, cfg.hidden, c)),
    ]
    return [CostRow(path=path, macs=macs) for path, macs in rows]


def count_macs(spec: VariantSpec, input_size: Optional[int] = None) -> CostReport:
    input_size = input_size or spec.input_size
    if input_size < 1:
        raise ArgumentError(f"input size must be positive, got {input_size}")
    rows: List[CostRow] = []
    cin = 3
    grids = stage_grids(spec, input_size)
    for i, (cfg, depth, (h, w)) in enumerate(zip(stage_configs(spec), spec.blocks, grids), start=1):
        k = spec.stem_kernel if i == 1 else spec.downsample_kernel
        rows.append(CostRow(path=f"stage{i}.embed", macs=conv_macs(k, k, cin, cfg.channels, h, w)))
        for j in range(depth):
            rows += block_macs(cfg, h, w, f"stage{i}.block{j}")
        cin = cfg.channels
    rows.append(CostRow(path="head.fc", macs=linear_macs(1, cin, spec.num_classes)))
    return CostReport.from_rows(spec.name, input_size, rows)


def cost_report(spec: VariantSpec, input_size: Optional[int] = None) -> CostReport:
    """Parameters and MACs merged per module path, in model order."""
    merged: "OrderedDict[str, List[int]]" = OrderedDict()
    for row in count_params(spec).breakdown:
        merged.setdefault(module_path(row.path), [0, 0])[0] += row.params
    macs = count_macs(spec, input_size)
    for row in macs.breakdown:
        merged.setdefault(row.path, [0, 0])[1] += row.macs
    rows = [CostRow(path=path, params=p, macs=m) for path, (p, m) in merged.items()]
    report = CostReport.from_rows(spec.name, macs.input_size, rows)
    logger.info(
        f"EdgeViT-{spec.name} @{macs.input_size}: {report.total_params} params, "
        f"{report.total_macs} MACs"
    )
    return report


def block_params(cfg: LglConfig) -> int:
    return sum(p.size for p in block_parameter_shapes(cfg, "block").values())


def lgl_cost_formula(h: int, w: int, c: int, k: int, r: int) -> LglCostTerms:
    """Asymptotic LGL terms (k^2*hwc, h^2*w^2*c / r^4, r^2*hwc).

    The attention term counts one product per (query, key, channel); the measured
    `.attn.scores` row is exactly twice it, covering both the scores and the weighted sum.
    """
    for label, value in (("h", h), ("w", w), ("c", c), ("k", k), ("r", r)):
        if value < 1:
            raise ArgumentError(f"{label} must be positive, got {value}")
    hwc = h * w * c
    return LglCostTerms(
        local=k * k * hwc,
        attention=(h * w) ** 2 * c / r ** 4,
        propagation=r * r * hwc,
    )


def efficiency_metric(top1: float, energy_mj: float) -> float:
    """Top-1 accuracy gained per millijoule (%/msW)."""
    if not energy_mj > 0:
        raise DomainError(f"energy must be positive, got {energy_mj} mJ")
    return top1 / energy_mj


def pareto_front(entries: Iterable[EfficiencyEntry]) -> List[RankedEntry]:
    """Score every entry and mark the ones no other entry beats on both accuracy and energy."""
    entries = list(entries)
    ranked = []
    for e in entries:
        dominated = any(
            o.top1 >= e.top1 and o.energy_mj <= e.energy_mj
            and (o.top1 > e.top1 or o.energy_mj < e.energy_mj)
            for o in entries
        )
        ranked.append(RankedEntry(
            **e.model_dump(),
            efficiency=efficiency_metric(e.top1, e.energy_mj),
            pareto_optimal=not dominated,
        ))
    return sorted(ranked, key=lambda r: r.efficiency, reverse=True)


def render_cost_text(report: CostReport) -> str:
    width = max([len(r.path) for r in report.breakdown] + [len("total")])
    lines = [f"EdgeViT-{report.variant} @ {report.input_size or '-'}"]
    lines.append(f"{'module':<{width}}  {'params':>12}  {'MACs':>15}")
    for row in report.breakdown:
        lines.append(f"{row.path:<{width}}  {row.params:>12,}  {row.macs:>15,}")
    lines.append(f"{'total':<{width}}  {report.total_params:>12,}  {report.total_macs:>15,}")
    lines.append(
        f"{report.total_params / 1e6:.2f}M params, {report.total_macs / 1e9:.3f}G MACs"
    )
    return "\n".join(lines)
