"API package for the EdgeViT engine."

__all__ = []
