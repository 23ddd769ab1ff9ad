from typing import List

from fastapi import APIRouter, Query

from models.schemas import EfficiencyRankRequest, LglCostTerms, RankedEntry
from services import analysis_service

router = APIRouter(tags=["analysis"])


@router.get("/complexity", response_model=LglCostTerms)
async def complexity(
    h: int = Query(..., ge=1),
    w: int = Query(..., ge=1),
    c: int = Query(..., ge=1),
    k: int = Query(3, ge=1),
    r: int = Query(1, ge=1),
):
    """
    Local, attention and propagation cost terms of one LGL block.
    """
    return analysis_service.lgl_cost_formula(h, w, c, k, r)


@router.post("/efficiency/rank", response_model=List[RankedEntry])
async def rank_efficiency(request: EfficiencyRankRequest):
    return analysis_service.pareto_front(request.entries)
