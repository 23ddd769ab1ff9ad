from fastapi import APIRouter
from fastapi.concurrency import run_in_threadpool

from models.schemas import EnergyReport, PowerAnalyzeRequest
from services.power_service import PowerAnalyzer, PowerTrace

router = APIRouter(prefix="/power", tags=["power"])


@router.post("/analyze", response_model=EnergyReport)
async def analyze_trace(request: PowerAnalyzeRequest):
    """
    Per-inference energy and power from inline `[timestamp_s, power_w]` samples.
    """
    trace = PowerTrace.from_samples(request.samples, device=request.device)
    idle = None
    if request.idle_start is not None and request.idle_end is not None:
        idle = (request.idle_start, request.idle_end)
    analyzer = PowerAnalyzer()
    return await run_in_threadpool(
        analyzer.run, trace, request.expected, idle_window=idle, top1=request.top1
    )
