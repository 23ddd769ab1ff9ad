"""
API v1 endpoints package for the EdgeViT engine.
"""

__all__ = ["analysis", "power", "variants"]

from . import analysis, power, variants
