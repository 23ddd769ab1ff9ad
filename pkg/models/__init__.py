"""
Data models package for the EdgeViT engine.
"""

__all__ = ["schemas"]

from . import schemas
