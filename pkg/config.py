from pydantic_settings import BaseSettings
from pathlib import Path
from typing import Literal
import os


class Settings(BaseSettings):
    # Application settings
    DEBUG: bool = False
    LOG_FORMAT: Literal["text", "json"] = "text"
    DEFAULT_SEED: int = 0

    # Numerics
    CONV_METHOD: Literal["im2col", "direct"] = "im2col"
    LAYERNORM_EPS: float = 1e-6

    # Latency harness (forward pass 50 times, untimed warmup first)
    BENCH_RUNS: int = 50
    BENCH_WARMUP: int = 10
    BENCH_THREADS: int = 1

    # Power trace analysis
    POWER_THRESHOLD_SIGMA: float = 3.0
    POWER_MIN_MARGIN_W: float = 0.1
    POWER_MERGE_GAP_S: float = 0.005
    POWER_DEFAULT_IDLE_S: float = 0.5
    POWER_EDGE_SAMPLES: int = 1

    # File paths
    BASE_DIR: Path = Path(__file__).parent
    # read-only deployments write to /tmp
    OUTPUT_DIR: Path = BASE_DIR / "out" if os.access(BASE_DIR, os.W_OK) else Path("/tmp")

    class Config:
        env_file = ".env"
        env_file_encoding = 'utf-8'
        case_sensitive = True
        extra = 'ignore'  # Ignore extra fields in .env file

# Initialize settings
settings = Settings()
