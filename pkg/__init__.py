"""EdgeViT inference, cost accounting and power-trace measurement engine."""

__version__ = "0.1.0"
