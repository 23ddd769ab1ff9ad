import math
import statistics
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from exceptions import ConfigError

M = TypeVar("M", bound=BaseModel)


def parse_config(model: Type[M], data: Any) -> M:
    """Validate `data` into `model`, reporting failures as ConfigError."""
    if isinstance(data, model):
        return data
    try:
        return model.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or model.__name__}: {err['msg']}"
            for err in e.errors()
        )
        raise ConfigError(f"invalid {model.__name__}: {problems}") from e


class Sampler(str, Enum):
    CENTER = "center"
    AVG = "avg"
    MAX = "max"


class Propagation(str, Enum):
    TRANSPOSED_CONV = "transposed_conv"
    BILINEAR = "bilinear"
    NONE = "none"


class AttnMode(str, Enum):
    SPARSE = "sparse"
    KV_DOWNSAMPLED = "kv_downsampled"


class LglOptions(BaseModel):
    """Block-level switches shared by every LGL block of a variant."""

    model_config = ConfigDict(frozen=True)

    local_kernel: int = Field(3, ge=1)
    ffn_ratio: int = Field(4, ge=1)
    sampler: Sampler = Sampler.CENTER
    propagation: Propagation = Propagation.TRANSPOSED_CONV
    attn_mode: AttnMode = AttnMode.SPARSE
    dual_cpe: bool = True
    share_ffn: bool = False

    @field_validator("local_kernel")
    @classmethod
    def odd_kernel(cls, k: int) -> int:
        if k % 2 == 0:
            raise ValueError(f"local kernel must be odd, got {k}")
        return k

    @model_validator(mode="after")
    def propagation_matches_attention(self):
        if self.attn_mode is AttnMode.SPARSE and self.propagation is Propagation.NONE:
            raise ValueError(
                "propagation 'none' is only valid with attn_mode 'kv_downsampled'"
            )
        return self


class VariantSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = "custom"
    channels: List[int]
    blocks: List[int]
    heads: List[int]
    sample_rates: List[int] = [4, 2, 2, 1]
    stem_kernel: int = Field(4, ge=1)
    downsample_kernel: int = Field(2, ge=1)
    num_classes: int = Field(1000, ge=1)
    input_size: int = Field(224, ge=1)
    dense_stage_local: bool = False
    lgl: LglOptions = LglOptions()

    @model_validator(mode="after")
    def check_stages(self):
        lists = {
            "channels": self.channels,
            "blocks": self.blocks,
            "heads": self.heads,
            "sample_rates": self.sample_rates,
        }
        for key, values in lists.items():
            if len(values) != 4:
                raise ValueError(f"{key} needs 4 stages, got {len(values)}")
        if any(c < 1 for c in self.channels):
            raise ValueError(f"channels must be >= 1, got {self.channels}")
        if any(b < 0 for b in self.blocks):
            raise ValueError(f"block counts must be >= 0, got {self.blocks}")
        if any(r < 1 for r in self.sample_rates):
            raise ValueError(f"sample rates must be >= 1, got {self.sample_rates}")
        if any(a > b for a, b in zip(self.channels, self.channels[1:])):
            raise ValueError(f"channels must be nondecreasing, got {self.channels}")
        for i, (c, h) in enumerate(zip(self.channels, self.heads), start=1):
            if h < 1 or c % h:
                raise ValueError(f"stage {i}: heads {h} does not divide channels {c}")
        return self


class CostRow(BaseModel):
    path: str
    params: int = 0
    macs: int = 0


class CostReport(BaseModel):
    variant: str
    input_size: Optional[int] = None
    total_params: int
    total_macs: int
    breakdown: List[CostRow]

    @model_validator(mode="after")
    def totals_are_sums(self):
        if sum(r.params for r in self.breakdown) != self.total_params:
            raise ValueError("total_params differs from the breakdown sum")
        if sum(r.macs for r in self.breakdown) != self.total_macs:
            raise ValueError("total_macs differs from the breakdown sum")
        return self

    @classmethod
    def from_rows(cls, variant: str, input_size: Optional[int], rows: List[CostRow]) -> "CostReport":
        return cls(
            variant=variant,
            input_size=input_size,
            total_params=sum(r.params for r in rows),
            total_macs=sum(r.macs for r in rows),
            breakdown=rows,
        )


class LglCostTerms(BaseModel):
    local: float
    attention: float
    propagation: float

    @property
    def total(self) -> float:
        return self.local + self.attention + self.propagation


class LatencyReport(BaseModel):
    variant: str
    input_size: int
    threads: int = 1
    runs: int = Field(..., gt=1)
    warmup: int = Field(..., ge=0)
    samples_ms: List[float]
    mean_ms: float
    std_ms: float

    @model_validator(mode="after")
    def consistent(self):
        if len(self.samples_ms) != self.runs:
            raise ValueError(f"{len(self.samples_ms)} samples recorded for {self.runs} runs")
        if not math.isclose(statistics.fmean(self.samples_ms), self.mean_ms, rel_tol=0, abs_tol=1e-9):
            raise ValueError("mean_ms does not match samples_ms")
        if not math.isclose(statistics.stdev(self.samples_ms), self.std_ms, rel_tol=0, abs_tol=1e-9):
            raise ValueError("std_ms does not match samples_ms")
        return self


class EnergyReport(BaseModel):
    device: str = "unknown"
    count: int
    background_w: float
    background_std_w: float
    threshold_w: Optional[float] = None
    regions: List[Tuple[int, int]]
    energies_mj: List[float]
    powers_w: List[float]
    raw_powers_w: List[float]
    energy_mean_mj: float
    energy_std_mj: float
    power_mean_w: float
    power_std_w: float
    raw_power_mean_w: float
    raw_power_std_w: float
    top1: Optional[float] = None
    efficiency: Optional[float] = None

    @model_validator(mode="after")
    def one_row_per_region(self):
        if not (len(self.regions) == len(self.energies_mj) == len(self.powers_w) == self.count):
            raise ValueError("region, energy and power lists must all have `count` entries")
        return self


class EfficiencyEntry(BaseModel):
    name: str
    top1: float
    energy_mj: float = Field(..., gt=0)


class RankedEntry(EfficiencyEntry):
    efficiency: float
    pareto_optimal: bool


class InferenceSummary(BaseModel):
    variant: str
    input_shape: List[int]
    logits_shape: List[int]
    top5: List[Tuple[int, float]]
    output: Optional[str] = None


class AblationReport(BaseModel):
    spec: VariantSpec
    cost: CostReport
    latency: Optional[LatencyReport] = None


class SynthSummary(BaseModel):
    """What `power synth` wrote, with the ground truth of its pulses."""

    output: str
    samples: int = Field(..., ge=2)
    count: int = Field(..., ge=1)
    energy_mj: float
    power_w: float
    background_w: float
    idle_window: Tuple[float, float]


class WeightsSummary(BaseModel):
    variant: str
    output: str
    parameters: int = Field(..., ge=1)
    values: int = Field(..., ge=1)


class RunConfig(BaseModel):
    """Resolved command-line options for one subcommand."""

    subcommand: str
    variant: Optional[str] = None
    spec_path: Optional[str] = None
    weights_path: Optional[str] = None
    input_path: Optional[str] = None
    random_input: bool = False
    seed: int = 0
    output_path: Optional[str] = None
    flags: Dict[str, Any] = {}

    @model_validator(mode="after")
    def exclusive_sources(self):
        if self.variant and self.spec_path:
            raise ValueError("--variant and --spec are mutually exclusive")
        if self.input_path and self.random_input:
            raise ValueError("--input takes a tensor path or 'random', not both")
        return self

    @model_validator(mode="after")
    def referenced_files_exist(self):
        for flag, path in (
            ("--spec", self.spec_path),
            ("--weights", self.weights_path),
            ("--input", self.input_path),
            ("--trace", self.flags.get("trace")),
        ):
            if path and not Path(path).is_file():
                raise ValueError(f"{flag} file not found: {path}")
        return self


class PowerAnalyzeRequest(BaseModel):
    samples: List[Tuple[float, float]] = Field(..., min_length=2)
    expected: int = Field(..., ge=1)
    idle_start: Optional[float] = None
    idle_end: Optional[float] = None
    top1: Optional[float] = None
    device: str = "unknown"


class EfficiencyRankRequest(BaseModel):
    entries: List[EfficiencyEntry] = Field(..., min_length=1)
