"""
Services package for the EdgeViT engine.
"""

__all__ = ["analysis_service", "bench_service", "model_service", "power_service", "weight_store"]

from . import weight_store, model_service, analysis_service, bench_service, power_service
