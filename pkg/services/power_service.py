"""Energy analysis of recorded power traces.

A trace is a CSV of `timestamp_s,power_w` samples recorded while a model runs a fixed number
of forward passes. The pipeline estimates the idle background, finds one contiguous
high-power region per inference, integrates background-subtracted power over each region
(trapezoid rule) and averages the per-inference results.
"""
import csv
import logging
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from config import settings
from exceptions import ArgumentError, DetectionError, InternalConsistencyError, TraceFormatError
from models.schemas import EnergyReport
from .analysis_service import efficiency_metric

logger = logging.getLogger(__name__)

HEADER = ["timestamp_s", "power_w"]

Region = Tuple[int, int]


@dataclass(frozen=True)
class PowerTrace:
    timestamps: np.ndarray
    power: np.ndarray
    device: str = "unknown"
    expected: Optional[int] = None

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=np.float64)
        p = np.asarray(self.power, dtype=np.float64)
        if t.ndim != 1 or t.shape != p.shape:
            raise TraceFormatError(
                f"timestamps {list(t.shape)} and power {list(p.shape)} must be equal-length vectors"
            )
        if t.size < 2:
            raise TraceFormatError(f"a trace needs at least 2 samples, got {t.size}")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(p))):
            raise TraceFormatError("trace contains non-finite values")
        steps = np.diff(t)
        if np.any(steps <= 0):
            i = int(np.argmax(steps <= 0)) + 1
            raise TraceFormatError(
                f"timestamps must be strictly increasing: sample {i} at {t[i]} s follows {t[i - 1]} s"
            )
        if np.any(p < 0):
            i = int(np.argmax(p < 0))
            raise TraceFormatError(f"negative power {p[i]} W at sample {i}")
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "power", p)

    @classmethod
    def from_samples(cls, samples: Sequence[Tuple[float, float]], **meta) -> "PowerTrace":
        if not samples:
            raise TraceFormatError("trace has no samples")
        t, p = zip(*samples)
        return cls(np.array(t), np.array(p), **meta)

    def __len__(self) -> int:
        return self.timestamps.size

    @property
    def span(self) -> Tuple[float, float]:
        return float(self.timestamps[0]), float(self.timestamps[-1])


def read_trace_csv(path: Union[str, Path], device: Optional[str] = None) -> PowerTrace:
    path = Path(path)
    samples = []
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != HEADER:
            raise TraceFormatError(f"{path}: expected header {','.join(HEADER)}, got {header}")
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise TraceFormatError(f"{path}:{reader.line_num}: expected 2 fields, got {len(row)}")
            try:
                samples.append((float(row[0]), float(row[1])))
            except ValueError:
                raise TraceFormatError(f"{path}:{reader.line_num}: not a number in {row}") from None
    trace = PowerTrace.from_samples(samples, device=device or path.stem)
    logger.info(f"Loaded {len(trace)} power samples from {path}")
    return trace


def write_trace_csv(trace: PowerTrace, path: Union[str, Path]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(HEADER)
        for t, p in zip(trace.timestamps, trace.power):
            writer.writerow([repr(float(t)), repr(float(p))])


@dataclass(frozen=True)
class BackgroundEstimate:
    mean_w: float
    std_w: float
    samples: int


def _sample_std(values: Sequence[float]) -> float:
    return statistics.stdev(values) if len(values) > 1 else 0.0


def estimate_background(trace: PowerTrace, idle_window: Tuple[float, float]) -> BackgroundEstimate:
    """Mean and sample std of the power readings in the half-open window [start, end)."""
    start, end = idle_window
    t0, t_last = trace.span
    if not start < end:
        raise ArgumentError(f"idle window [{start}, {end}) is empty")
    if start < t0 or end > t_last:
        raise ArgumentError(f"idle window [{start}, {end}) lies outside the trace span [{t0}, {t_last}]")
    mask = (trace.timestamps >= start) & (trace.timestamps < end)
    idle = trace.power[mask].tolist()
    if not idle:
        raise ArgumentError(f"idle window [{start}, {end}) contains no samples")
    return BackgroundEstimate(statistics.fmean(idle), _sample_std(idle), len(idle))


def detection_threshold(mean_w: float, std_w: float, sigma: float = None, margin_w: float = None) -> float:
    sigma = settings.POWER_THRESHOLD_SIGMA if sigma is None else sigma
    margin_w = settings.POWER_MIN_MARGIN_W if margin_w is None else margin_w
    return mean_w + max(sigma * std_w, margin_w)


def _runs(above: np.ndarray) -> List[Region]:
    edges = np.diff(np.concatenate(([0], above.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return [(int(s), int(e)) for s, e in zip(starts, ends)]


def detect_regions(
    trace: PowerTrace,
    background_mean: float,
    background_std: float,
    expected: int,
    sigma: float = None,
    margin_w: float = None,
    merge_gap_s: float = None,
) -> List[Region]:
    """Half-open index ranges [start, end) of the above-threshold runs.

    Runs whose below-threshold gap lasts less than `merge_gap_s` are merged. Raises
    DetectionError unless exactly `expected` regions remain.
    """
    if expected < 1:
        raise ArgumentError(f"expected region count must be >= 1, got {expected}")
    merge_gap_s = settings.POWER_MERGE_GAP_S if merge_gap_s is None else merge_gap_s
    threshold = detection_threshold(background_mean, background_std, sigma, margin_w)
    regions: List[Region] = []
    for start, end in _runs(trace.power > threshold):
        if regions and trace.timestamps[start] - trace.timestamps[regions[-1][1]] < merge_gap_s:
            regions[-1] = (regions[-1][0], end)
        else:
            regions.append((start, end))
    logger.info(f"Detected {len(regions)} regions above {threshold:.4f} W (expected {expected})")
    if len(regions) != expected:
        raise DetectionError(len(regions), expected, f"threshold {threshold:.4f} W")
    return regions


def analyze(
    trace: PowerTrace,
    regions: Sequence[Region],
    background: BackgroundEstimate,
    edge_samples: int = None,
    threshold_w: Optional[float] = None,
) -> EnergyReport:
    """Per-region energy (mJ) and mean power (W) after background subtraction.

    The integral also covers `edge_samples` samples on each side of a region so the
    rising and falling edges are not clipped.
    """
    edge_samples = settings.POWER_EDGE_SAMPLES if edge_samples is None else edge_samples
    if edge_samples < 0:
        raise ArgumentError(f"edge_samples must be >= 0, got {edge_samples}")
    n = len(trace)
    bg = background.mean_w
    energies, powers, raw_powers = [], [], []
    for start, end in regions:
        if not 0 <= start < end <= n:
            raise InternalConsistencyError(f"region [{start}, {end}) outside a trace of {n} samples")
        lo, hi = max(0, start - edge_samples), min(n, end + edge_samples)
        t = trace.timestamps[lo:hi]
        excess = trace.power[lo:hi] - bg
        energies.append(float(trapezoid(excess, t)) * 1000.0 if t.size > 1 else 0.0)
        raw = trace.power[start:end]
        powers.append(float(np.mean(raw - bg)))
        raw_powers.append(float(np.mean(raw)))
    if not regions:
        raise ArgumentError("no regions to analyze")
    return EnergyReport(
        device=trace.device,
        count=len(regions),
        background_w=bg,
        background_std_w=background.std_w,
        threshold_w=threshold_w,
        regions=[tuple(r) for r in regions],
        energies_mj=energies,
        powers_w=powers,
        raw_powers_w=raw_powers,
        energy_mean_mj=statistics.fmean(energies),
        energy_std_mj=_sample_std(energies),
        power_mean_w=statistics.fmean(powers),
        power_std_w=_sample_std(powers),
        raw_power_mean_w=statistics.fmean(raw_powers),
        raw_power_std_w=_sample_std(raw_powers),
    )


def efficiency(report: EnergyReport, top1: float) -> float:
    return efficiency_metric(top1, report.energy_mean_mj)


class PowerAnalyzer:
    """Background estimate, region detection and integration in one call."""

    def __init__(
        self,
        sigma: float = None,
        margin_w: float = None,
        merge_gap_s: float = None,
        edge_samples: int = None,
        default_idle_s: float = None,
    ):
        self.sigma = settings.POWER_THRESHOLD_SIGMA if sigma is None else sigma
        self.margin_w = settings.POWER_MIN_MARGIN_W if margin_w is None else margin_w
        self.merge_gap_s = settings.POWER_MERGE_GAP_S if merge_gap_s is None else merge_gap_s
        self.edge_samples = settings.POWER_EDGE_SAMPLES if edge_samples is None else edge_samples
        self.default_idle_s = settings.POWER_DEFAULT_IDLE_S if default_idle_s is None else default_idle_s

    def run(
        self,
        trace: PowerTrace,
        expected: Optional[int] = None,
        idle_window: Optional[Tuple[float, float]] = None,
        top1: Optional[float] = None,
    ) -> EnergyReport:
        expected = expected or trace.expected
        if expected is None:
            raise ArgumentError("expected inference count is required")
        if idle_window is None:
            t0, _ = trace.span
            idle_window = (t0, t0 + self.default_idle_s)
        background = estimate_background(trace, idle_window)
        regions = detect_regions(
            trace, background.mean_w, background.std_w, expected,
            sigma=self.sigma, margin_w=self.margin_w, merge_gap_s=self.merge_gap_s,
        )
        threshold = detection_threshold(background.mean_w, background.std_w, self.sigma, self.margin_w)
        report = analyze(trace, regions, background, self.edge_samples, threshold_w=threshold)
        if top1 is not None:
            report = report.model_copy(update={"top1": top1, "efficiency": efficiency(report, top1)})
        logger.info(
            f"{trace.device}: {report.energy_mean_mj:.2f} +- {report.energy_std_mj:.2f} mJ, "
            f"{report.power_mean_w:.3f} W over {report.count} inferences"
        )
        return report


@dataclass(frozen=True)
class SyntheticTruth:
    regions: List[Region]
    energy_mj: float
    power_w: float
    background_w: float
    idle_window: Tuple[float, float] = field(default=(0.0, 0.0))


def synthesize_trace(
    count: int = 50,
    pulse_power_w: float = 3.5,
    pulse_width_s: float = 0.1,
    gap_s: float = 0.05,
    floor_w: float = 0.5,
    rate_hz: float = 1000.0,
    noise_w: float = 0.0,
    lead_idle_s: float = 1.0,
    seed: int = 0,
    device: str = "synthetic",
) -> Tuple[PowerTrace, SyntheticTruth]:
    """Rectangular inference pulses on a constant floor, with optional Gaussian noise."""
    if count < 0 or rate_hz <= 0 or pulse_width_s <= 0 or gap_s < 0 or lead_idle_s < 0:
        raise ArgumentError(
            f"invalid generator settings: count={count} rate={rate_hz} width={pulse_width_s} "
            f"gap={gap_s} lead={lead_idle_s}"
        )
    lead = round(lead_idle_s * rate_hz)
    width = max(1, round(pulse_width_s * rate_hz))
    gap = round(gap_s * rate_hz)
    n = 2 * lead + count * width + max(count - 1, 0) * gap + 2
    power = np.full(n, floor_w, dtype=np.float64)
    regions = []
    for i in range(count):
        start = lead + i * (width + gap)
        power[start:start + width] = pulse_power_w
        regions.append((start, start + width))
    if noise_w > 0:
        rng = np.random.default_rng(seed)
        power = np.clip(power + rng.normal(0.0, noise_w, n), 0.0, None)
    timestamps = np.arange(n, dtype=np.float64) / rate_hz
    trace = PowerTrace(timestamps, power, device=device, expected=count)
    truth = SyntheticTruth(
        regions=regions,
        energy_mj=(pulse_power_w - floor_w) * width / rate_hz * 1000.0,
        power_w=pulse_power_w - floor_w,
        background_w=floor_w,
        idle_window=(0.0, lead / rate_hz),
    )
    return trace, truth
