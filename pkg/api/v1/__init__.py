"""API v1 package for the EdgeViT engine."""

__all__ = ["api_router"]

from .api import api_router
