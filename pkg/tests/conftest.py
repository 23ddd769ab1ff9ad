import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.append(str(project_root))

from tensor import Tensor  # noqa: E402


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def make_tensor(rng):
    def make(*shape, scale: float = 1.0) -> Tensor:
        return Tensor.from_numpy((rng.standard_normal(shape) * scale).astype(np.float32))

    return make
