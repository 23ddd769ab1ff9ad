"""EVTS raw tensor files.

Layout: b"EVTS", u32 version (1), u8 rank, rank x u32 extents, then the f32 payload,
all little-endian.
"""
import logging
import struct
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from exceptions import FormatError
from .core import Tensor

logger = logging.getLogger(__name__)

MAGIC = b"EVTS"
VERSION = 1


def write_tensor(stream: BinaryIO, tensor: Tensor) -> None:
    stream.write(MAGIC)
    stream.write(struct.pack("<IB", VERSION, tensor.rank))
    stream.write(struct.pack(f"<{tensor.rank}I", *tensor.shape))
    stream.write(tensor.data.astype("<f4", copy=False).tobytes())


def read_tensor(stream: BinaryIO) -> Tensor:
    magic = stream.read(4)
    if magic != MAGIC:
        raise FormatError(f"bad tensor magic {magic!r}, expected {MAGIC!r}")
    header = _read_exact(stream, 5, "tensor header")
    version, rank = struct.unpack("<IB", header)
    if version != VERSION:
        raise FormatError(f"unsupported tensor version {version}")
    shape = struct.unpack(f"<{rank}I", _read_exact(stream, 4 * rank, "tensor extents"))
    count = int(np.prod(shape)) if rank else 1
    payload = _read_exact(stream, 4 * count, "tensor payload")
    return Tensor.from_numpy(np.frombuffer(payload, dtype="<f4").reshape(shape))


def save_tensor(path: Union[str, Path], tensor: Tensor) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        write_tensor(f, tensor)
    logger.debug(f"Wrote tensor {list(tensor.shape)} to {path}")


def load_tensor(path: Union[str, Path]) -> Tensor:
    with open(path, "rb") as f:
        tensor = read_tensor(f)
        if f.read(1):
            raise FormatError(f"trailing bytes after tensor payload in {path}")
    return tensor


def _read_exact(stream: BinaryIO, n: int, what: str) -> bytes:
    chunk = stream.read(n)
    if len(chunk) != n:
        raise FormatError(f"truncated {what}: wanted {n} bytes, got {len(chunk)}")
    return chunk
