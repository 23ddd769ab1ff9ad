"""Latency harness: warmup, timed forward passes, mean and sample std."""
import logging
import statistics
import time
from typing import Callable, List, Optional

from config import settings
from exceptions import ArgumentError
from models.schemas import LatencyReport, VariantSpec
from tensor import Tensor
from .model_service import EdgeViTModel
from .weight_store import WeightStore

logger = logging.getLogger(__name__)

Clock = Callable[[], float]


class LatencyHarness:
    """Times `forward_fn` with an injectable clock returning seconds."""

    def __init__(
        self,
        forward_fn: Callable[[], object],
        runs: int = None,
        warmup: int = None,
        clock: Optional[Clock] = None,
    ):
        self.forward_fn = forward_fn
        self.runs = settings.BENCH_RUNS if runs is None else runs
        self.warmup = settings.BENCH_WARMUP if warmup is None else warmup
        self.clock = clock or time.perf_counter
        if self.runs < 2:
            raise ArgumentError(f"latency needs at least 2 timed runs, got {self.runs}")
        if self.warmup < 0:
            raise ArgumentError(f"warmup must be >= 0, got {self.warmup}")

    def measure(self) -> List[float]:
        for _ in range(self.warmup):
            self.forward_fn()
        samples_ms = []
        for _ in range(self.runs):
            start = self.clock()
            self.forward_fn()
            samples_ms.append((self.clock() - start) * 1000.0)
        return samples_ms

    def report(self, variant: str, input_size: int, threads: int = 1) -> LatencyReport:
        samples_ms = self.measure()
        report = LatencyReport(
            variant=variant,
            input_size=input_size,
            threads=threads,
            runs=self.runs,
            warmup=self.warmup,
            samples_ms=samples_ms,
            mean_ms=statistics.fmean(samples_ms),
            std_ms=statistics.stdev(samples_ms),
        )
        logger.info(
            f"Benchmarked {variant} @{input_size}: {report.mean_ms:.2f} +- {report.std_ms:.2f} ms "
            f"over {report.runs} runs"
        )
        return report


def run_latency(
    spec: VariantSpec,
    weights: WeightStore,
    x: Tensor,
    runs: int = None,
    warmup: int = None,
    threads: int = None,
    clock: Optional[Clock] = None,
    forward_fn: Optional[Callable[[], object]] = None,
) -> LatencyReport:
    """Benchmark one variant. The model is built before timing starts."""
    threads = threads or settings.BENCH_THREADS
    if forward_fn is None:
        model = EdgeViTModel(spec, weights, threads=threads)
        forward_fn = lambda: model.forward(x)  # noqa: E731
    harness = LatencyHarness(forward_fn, runs=runs, warmup=warmup, clock=clock)
    return harness.report(spec.name, x.shape[1], threads=threads)


def render_latency_text(report: LatencyReport) -> str:
    return (
        f"EdgeViT-{report.variant} @ {report.input_size}  threads={report.threads}\n"
        f"runs={report.runs} warmup={report.warmup}\n"
        f"latency: {report.mean_ms:.3f} +- {report.std_ms:.3f} ms "
        f"(min {min(report.samples_ms):.3f}, max {max(report.samples_ms):.3f})"
    )
