"""Named parameter blobs and the EVWT weight file.

EVWT layout (little-endian): b"EVWT", u32 version (1), u32 entry count; per entry a u16
name length, the UTF-8 name, u8 dtype (0 = f32), u8 rank, rank x u32 extents, f32 payload.
"""
import logging
import struct
from collections import OrderedDict
from pathlib import Path
from typing import BinaryIO, Dict, Iterator, Tuple, Union

import numpy as np

from exceptions import DuplicateParameterError, FormatError, MissingParameterError
from tensor import Tensor

logger = logging.getLogger(__name__)

MAGIC = b"EVWT"
VERSION = 1
DTYPE_F32 = 0


class WeightStore:
    def __init__(self, entries: Dict[str, Tensor] = None):
        self._entries: "OrderedDict[str, Tensor]" = OrderedDict()
        for name, tensor in (entries or {}).items():
            self.add(name, tensor)

    def add(self, name: str, tensor: Tensor) -> None:
        if name in self._entries:
            raise DuplicateParameterError(f"duplicate parameter name '{name}'")
        self._entries[name] = tensor

    def get(self, name: str) -> Tensor:
        try:
            return self._entries[name]
        except KeyError:
            raise MissingParameterError(name) from None

    def without(self, name: str) -> "WeightStore":
        return WeightStore(OrderedDict((k, v) for k, v in self._entries.items() if k != name))

    def names(self):
        return list(self._entries)

    def items(self) -> Iterator[Tuple[str, Tensor]]:
        return iter(self._entries.items())

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightStore):
            return NotImplemented
        return self.names() == other.names() and all(
            a.shape == b.shape and a.data.tobytes() == b.data.tobytes()
            for a, b in zip(self._entries.values(), other._entries.values())
        )

    __hash__ = None


def write_weights(stream: BinaryIO, store: WeightStore) -> None:
    stream.write(MAGIC)
    stream.write(struct.pack("<II", VERSION, len(store)))
    for name, tensor in store.items():
        encoded = name.encode("utf-8")
        stream.write(struct.pack("<H", len(encoded)))
        stream.write(encoded)
        stream.write(struct.pack("<BB", DTYPE_F32, tensor.rank))
        stream.write(struct.pack(f"<{tensor.rank}I", *tensor.shape))
        stream.write(tensor.data.astype("<f4", copy=False).tobytes())


def read_weights(stream: BinaryIO) -> WeightStore:
    magic = stream.read(4)
    if magic != MAGIC:
        raise FormatError(f"bad weight file magic {magic!r}, expected {MAGIC!r}")
    version, count = struct.unpack("<II", _read_exact(stream, 8, "header"))
    if version != VERSION:
        raise FormatError(f"unsupported weight file version {version}")
    store = WeightStore()
    for index in range(count):
        (name_len,) = struct.unpack("<H", _read_exact(stream, 2, f"entry {index} name length"))
        try:
            name = _read_exact(stream, name_len, f"entry {index} name").decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError(f"entry {index} name is not UTF-8") from e
        dtype, rank = struct.unpack("<BB", _read_exact(stream, 2, f"'{name}' dtype/rank"))
        if dtype != DTYPE_F32:
            raise FormatError(f"'{name}' has unsupported dtype code {dtype}")
        shape = struct.unpack(f"<{rank}I", _read_exact(stream, 4 * rank, f"'{name}' extents"))
        count_values = int(np.prod(shape)) if rank else 1
        payload = _read_exact(stream, 4 * count_values, f"'{name}' payload")
        store.add(name, Tensor.from_numpy(np.frombuffer(payload, dtype="<f4").reshape(shape)))
    return store


def save_weights(store: WeightStore, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        write_weights(f, store)
    logger.info(f"Saved {len(store)} parameters to {path}")


def load_weights(path: Union[str, Path]) -> WeightStore:
    with open(path, "rb") as f:
        store = read_weights(f)
        if f.read(1):
            raise FormatError(f"trailing bytes after the last entry in {path}")
    logger.info(f"Loaded {len(store)} parameters from {path}")
    return store


def _read_exact(stream: BinaryIO, n: int, what: str) -> bytes:
    chunk = stream.read(n)
    if len(chunk) != n:
        raise FormatError(f"truncated weight file: {what} wants {n} bytes, got {len(chunk)}")
    return chunk
