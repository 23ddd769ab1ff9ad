from fastapi import APIRouter, HTTPException, Query, status

from exceptions import ConfigError
from models.schemas import CostReport, VariantSpec
from services import analysis_service, model_service

router = APIRouter(prefix="/variants", tags=["variants"])


def _variant(name: str) -> VariantSpec:
    try:
        return model_service.build_variant(name)
    except ConfigError as e:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=str(e))


@router.get("/", response_model=list[str])
async def list_variants():
    return sorted(model_service.VARIANTS)


@router.get("/{name}", response_model=VariantSpec)
async def get_variant(name: str):
    return _variant(name)


@router.get("/{name}/cost", response_model=CostReport)
async def get_variant_cost(name: str, input_size: int = Query(224, ge=1, le=4096)):
    """
    Parameters and multiply-adds of a named variant, per module.
    """
    return analysis_service.cost_report(_variant(name), input_size)
