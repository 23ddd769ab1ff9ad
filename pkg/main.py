import argparse
import json
import logging
import logging.config
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

# Add the project root to the Python path
project_root = Path(__file__).parent
sys.path.append(str(project_root))

from config import settings
from exceptions import ConfigError, EdgeViTError
from models.schemas import (
    AblationReport,
    AttnMode,
    CostReport,
    EnergyReport,
    InferenceSummary,
    LatencyReport,
    Propagation,
    RankedEntry,
    RunConfig,
    Sampler,
    SynthSummary,
    VariantSpec,
    WeightsSummary,
    parse_config,
)
from services import analysis_service, bench_service, model_service, power_service
from services.weight_store import load_weights, save_weights
from tensor.io import load_tensor, save_tensor

logger = logging.getLogger(__name__)

SCHEMAS = {
    "variant": VariantSpec,
    "cost": CostReport,
    "latency": LatencyReport,
    "energy": EnergyReport,
    "inference": InferenceSummary,
    "ablation": AblationReport,
    "ranked": RankedEntry,
    "synth": SynthSummary,
    "weights": WeightsSummary,
}

PROPAGATION_FLAGS = {"transposed": Propagation.TRANSPOSED_CONV, "bilinear": Propagation.BILINEAR}


def configure_logging() -> None:
    formatter = "json" if settings.LOG_FORMAT == "json" else "default"
    logging.config.dictConfig({  # type: ignore
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "default": {
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            },
            "json": {
                "()": "pythonjsonlogger.jsonlogger.JsonFormatter",
                "format": "%(asctime)s %(name)s %(levelname)s %(message)s",
            },
        },
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "formatter": formatter,
                "stream": "ext://sys.stderr",
            },
        },
        "root": {
            "handlers": ["console"],
            "level": "INFO" if not settings.DEBUG else "DEBUG",
        },
    })


def _add_model_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--variant", choices=sorted(model_service.VARIANTS), help="named variant")
    p.add_argument("--spec", dest="spec_path", help="JSON variant spec file")


def _add_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["text", "json"], default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgevit", description="EdgeViT inference and measurement engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="run one forward pass")
    _add_model_source(p)
    p.add_argument("--weights", dest="weights_path", help="EVWT weights (default: seeded init)")
    p.add_argument("--input", default="random", help="EVTS tensor path or 'random'")
    p.add_argument("--input-size", type=int, default=None)
    p.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    p.add_argument("--threads", type=int, default=settings.BENCH_THREADS)
    p.add_argument("--output", dest="output_path", help="EVTS file for the logits")

    p = sub.add_parser("count", help="parameter and MAC accounting")
    _add_model_source(p)
    p.add_argument("--input-size", type=int, default=None)
    p.add_argument("--breakdown", action="store_true", help="list every module in text output")
    _add_format(p)

    p = sub.add_parser("bench", help="latency of repeated forward passes")
    _add_model_source(p)
    p.add_argument("--weights", dest="weights_path")
    p.add_argument("--input-size", type=int, default=None)
    p.add_argument("--runs", type=int, default=settings.BENCH_RUNS)
    p.add_argument("--warmup", type=int, default=settings.BENCH_WARMUP)
    p.add_argument("--threads", type=int, default=settings.BENCH_THREADS)
    p.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    _add_format(p)

    power = sub.add_parser("power", help="power trace analysis").add_subparsers(dest="power_command", required=True)
    p = power.add_parser("analyze", help="energy per inference from a CSV trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--expected", type=int, required=True)
    p.add_argument("--idle-start", type=float, default=None)
    p.add_argument("--idle-end", type=float, default=None)
    p.add_argument("--top1", type=float, default=None)
    p.add_argument("--device", default=None)
    p.add_argument("--sigma", type=float, default=settings.POWER_THRESHOLD_SIGMA)
    p.add_argument("--margin", type=float, default=settings.POWER_MIN_MARGIN_W)
    p.add_argument("--merge-gap", type=float, default=settings.POWER_MERGE_GAP_S)
    p.add_argument("--edge-samples", type=int, default=settings.POWER_EDGE_SAMPLES)
    _add_format(p)

    p = power.add_parser("synth", help="write a synthetic pulse trace")
    p.add_argument("--output", dest="output_path", required=True)
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--pulse-power", type=float, default=3.5)
    p.add_argument("--pulse-width", type=float, default=0.1)
    p.add_argument("--gap", type=float, default=0.05)
    p.add_argument("--floor", type=float, default=0.5)
    p.add_argument("--rate", type=float, default=1000.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--lead-idle", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)

    p = sub.add_parser("init-weights", help="write seeded random weights")
    _add_model_source(p)
    p.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    p.add_argument("--output", dest="output_path", help="EVWT path (default: OUTPUT_DIR/edgevit-<name>.evwt)")

    p = sub.add_parser("ablate", help="cost (and latency) of an LGL ablation")
    _add_model_source(p)
    p.add_argument("--sampler", choices=[s.value for s in Sampler], default=Sampler.CENTER.value)
    p.add_argument("--prop", choices=sorted(PROPAGATION_FLAGS), default=None, help="default: transposed")
    p.add_argument("--attn", choices=[a.value for a in AttnMode], default=AttnMode.SPARSE.value)
    p.add_argument("--input-size", type=int, default=None)
    p.add_argument("--bench", action="store_true")
    p.add_argument("--runs", type=int, default=settings.BENCH_RUNS)
    p.add_argument("--warmup", type=int, default=settings.BENCH_WARMUP)
    p.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    _add_format(p)

    p = sub.add_parser("schema", help="print the JSON schema of a report")
    p.add_argument("name", choices=sorted(SCHEMAS))

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    values = vars(args)
    source = values.get("input", "random")
    return parse_config(RunConfig, {
        "subcommand": args.command,
        "variant": values.get("variant"),
        "spec_path": values.get("spec_path"),
        "weights_path": values.get("weights_path"),
        "input_path": None if source == "random" else source,
        "random_input": source == "random",
        "seed": values.get("seed", settings.DEFAULT_SEED),
        "output_path": values.get("output_path"),
        "flags": {k: v for k, v in values.items() if k not in {"command", "input"}},
    })


def _spec(run: RunConfig, **overrides) -> VariantSpec:
    if run.spec_path:
        spec = model_service.load_spec(run.spec_path)
        return model_service.build_variant(spec, **overrides) if overrides else spec
    if not run.variant:
        raise ConfigError("one of --variant or --spec is required")
    return model_service.build_variant(run.variant, **overrides)


def _weights(run: RunConfig, spec: VariantSpec):
    if run.weights_path:
        return load_weights(run.weights_path)
    return model_service.init_params(spec, run.seed)


def _emit(text: str) -> None:
    sys.stdout.write(text + "\n")


def cmd_infer(run: RunConfig) -> None:
    spec = _spec(run)
    weights = _weights(run, spec)
    if run.input_path:
        x = load_tensor(run.input_path)
    else:
        x = model_service.random_input(run.flags.get("input_size") or spec.input_size, run.seed)
    logits = model_service.forward(spec, weights, x, threads=run.flags.get("threads", 1))
    row = logits.data[0]
    top = np.argsort(row)[::-1][:5]
    if run.output_path:
        save_tensor(run.output_path, logits)
    summary = InferenceSummary(
        variant=spec.name,
        input_shape=list(x.shape),
        logits_shape=list(logits.shape),
        top5=[(int(i), float(row[i])) for i in top],
        output=run.output_path,
    )
    _emit(summary.model_dump_json())


def cmd_count(run: RunConfig) -> None:
    report = analysis_service.cost_report(_spec(run), run.flags.get("input_size"))
    if run.flags["format"] == "json":
        _emit(report.model_dump_json())
    elif run.flags.get("breakdown"):
        _emit(analysis_service.render_cost_text(report))
    else:
        _emit(
            f"EdgeViT-{report.variant} @ {report.input_size}: "
            f"{report.total_params / 1e6:.2f}M params, {report.total_macs / 1e9:.3f}G MACs"
        )


def _bench(run: RunConfig, spec: VariantSpec) -> LatencyReport:
    x = model_service.random_input(run.flags.get("input_size") or spec.input_size, run.seed)
    return bench_service.run_latency(
        spec, _weights(run, spec), x,
        runs=run.flags["runs"], warmup=run.flags["warmup"], threads=run.flags.get("threads", 1),
    )


def cmd_bench(run: RunConfig) -> None:
    report = _bench(run, _spec(run))
    if run.flags["format"] == "json":
        _emit(report.model_dump_json())
    else:
        _emit(bench_service.render_latency_text(report))


def cmd_power_analyze(run: RunConfig) -> None:
    f = run.flags
    trace = power_service.read_trace_csv(f["trace"], device=f.get("device"))
    idle = None
    if f.get("idle_start") is not None or f.get("idle_end") is not None:
        t0, _ = trace.span
        start = t0 if f.get("idle_start") is None else f["idle_start"]
        end = start + settings.POWER_DEFAULT_IDLE_S if f.get("idle_end") is None else f["idle_end"]
        idle = (start, end)
    analyzer = power_service.PowerAnalyzer(
        sigma=f["sigma"], margin_w=f["margin"], merge_gap_s=f["merge_gap"], edge_samples=f["edge_samples"]
    )
    report = analyzer.run(trace, f["expected"], idle_window=idle, top1=f.get("top1"))
    if f["format"] == "json":
        _emit(report.model_dump_json())
        return
    lines = [
        f"device: {report.device}",
        f"background: {report.background_w:.4f} W (std {report.background_std_w:.4f}), "
        f"threshold {report.threshold_w:.4f} W",
        f"{'#':>4}  {'start':>8}  {'end':>8}  {'energy mJ':>10}  {'power W':>8}  {'raw W':>8}",
    ]
    for i, ((s, e), en, pw, raw) in enumerate(
        zip(report.regions, report.energies_mj, report.powers_w, report.raw_powers_w)
    ):
        lines.append(f"{i:>4}  {s:>8}  {e:>8}  {en:>10.3f}  {pw:>8.4f}  {raw:>8.4f}")
    lines.append(f"energy: {report.energy_mean_mj:.3f} +- {report.energy_std_mj:.3f} mJ")
    lines.append(f"power: {report.power_mean_w:.4f} +- {report.power_std_w:.4f} W "
                 f"(raw {report.raw_power_mean_w:.4f} +- {report.raw_power_std_w:.4f} W)")
    if report.efficiency is not None:
        lines.append(f"efficiency: {report.efficiency:.3f} %/msW")
    _emit("\n".join(lines))


def cmd_power_synth(run: RunConfig) -> None:
    f = run.flags
    trace, truth = power_service.synthesize_trace(
        count=f["count"], pulse_power_w=f["pulse_power"], pulse_width_s=f["pulse_width"],
        gap_s=f["gap"], floor_w=f["floor"], rate_hz=f["rate"], noise_w=f["noise"],
        lead_idle_s=f["lead_idle"], seed=run.seed,
    )
    power_service.write_trace_csv(trace, run.output_path)
    logger.info(f"Wrote {len(trace)} samples to {run.output_path}")
    summary = SynthSummary(
        output=run.output_path,
        samples=len(trace),
        count=len(truth.regions),
        energy_mj=truth.energy_mj,
        power_w=truth.power_w,
        background_w=truth.background_w,
        idle_window=truth.idle_window,
    )
    _emit(summary.model_dump_json())


def cmd_init_weights(run: RunConfig) -> None:
    spec = _spec(run)
    store = model_service.init_params(spec, run.seed)
    path = Path(run.output_path or settings.OUTPUT_DIR / f"edgevit-{spec.name}.evwt")
    path.parent.mkdir(parents=True, exist_ok=True)
    save_weights(store, path)
    summary = WeightsSummary(
        variant=spec.name,
        output=str(path),
        parameters=len(store),
        values=sum(tensor.size for _, tensor in store.items()),
    )
    _emit(summary.model_dump_json())


def cmd_ablate(run: RunConfig) -> None:
    f = run.flags
    base = _spec(run)
    if f["attn"] == AttnMode.KV_DOWNSAMPLED.value:
        if f.get("prop") is not None:
            raise ConfigError(
                f"--prop {f['prop']} conflicts with --attn kv_downsampled (no propagation step)"
            )
        propagation = Propagation.NONE
    else:
        propagation = PROPAGATION_FLAGS[f.get("prop") or "transposed"]
    options = {
        **base.lgl.model_dump(),
        "sampler": f["sampler"],
        "propagation": propagation,
        "attn_mode": f["attn"],
    }
    spec = model_service.build_variant(base, lgl=options)
    report = AblationReport(
        spec=spec,
        cost=analysis_service.cost_report(spec, f.get("input_size")),
        latency=_bench(run, spec) if f.get("bench") else None,
    )
    if f["format"] == "json":
        _emit(report.model_dump_json())
        return
    _emit(
        f"sampler={spec.lgl.sampler.value} propagation={spec.lgl.propagation.value} "
        f"attn={spec.lgl.attn_mode.value}"
    )
    _emit(analysis_service.render_cost_text(report.cost))
    if report.latency:
        _emit(bench_service.render_latency_text(report.latency))


def cmd_schema(args: argparse.Namespace) -> None:
    _emit(json.dumps(SCHEMAS[args.name].model_json_schema(), indent=2))


def cmd_serve(args: argparse.Namespace) -> None:
    import uvicorn

    uvicorn.run("api.index:app", host=args.host, port=args.port)


COMMANDS = {
    "infer": cmd_infer,
    "count": cmd_count,
    "bench": cmd_bench,
    ("power", "analyze"): cmd_power_analyze,
    ("power", "synth"): cmd_power_synth,
    "init-weights": cmd_init_weights,
    "ablate": cmd_ablate,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    configure_logging()
    try:
        if args.command == "schema":
            cmd_schema(args)
        elif args.command == "serve":
            cmd_serve(args)
        else:
            key = ("power", args.power_command) if args.command == "power" else args.command
            COMMANDS[key](_run_config(args))
    except (EdgeViTError, OSError) as e:
        logger.debug("command failed", exc_info=True)
        sys.stderr.write(json.dumps({"error": type(e).__name__, "detail": str(e)}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
