"""IDX container used by the MNIST distribution files.

Layout (big-endian): a 4-byte magic ``00 00 08 <ndims>``, ``ndims`` 32-bit dimension sizes,
then the unsigned-byte payload in row-major order.
"""

import gzip
import struct
from pathlib import Path
from typing import Union

import numpy as np

from src.core.constants import Constants
from src.core.exceptions import IdxFormatError

_DIMS_BY_MAGIC = {Constants.IDX_LABELS_MAGIC: 1, Constants.IDX_IMAGES_MAGIC: 3}
_GZIP_MAGIC = b"\x1f\x8b"


def parse_idx(data: bytes) -> np.ndarray:
    if len(data) < 4:
        raise IdxFormatError("IDX data shorter than its magic number")
    (magic,) = struct.unpack(">I", data[:4])
    if magic not in _DIMS_BY_MAGIC:
        raise IdxFormatError(f"unsupported IDX magic 0x{magic:08x}")
    ndims = _DIMS_BY_MAGIC[magic]
    header_size = 4 + 4 * ndims
    if len(data) < header_size:
        raise IdxFormatError("IDX header truncated")
    dims = struct.unpack(">" + "I" * ndims, data[4:header_size])
    expected = int(np.prod(dims))
    payload = data[header_size:]
    if len(payload) != expected:
        raise IdxFormatError(f"IDX payload has {len(payload)} bytes, dims {dims} need {expected}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def serialize_idx(array: np.ndarray) -> bytes:
    array = np.asarray(array, dtype=np.uint8)
    magic = {1: Constants.IDX_LABELS_MAGIC, 3: Constants.IDX_IMAGES_MAGIC}.get(array.ndim)
    if magic is None:
        raise IdxFormatError(f"only 1-D labels or 3-D images are supported, got {array.ndim}-D")
    header = struct.pack(">I", magic) + struct.pack(">" + "I" * array.ndim, *array.shape)
    return header + array.tobytes(order="C")


def load_idx(path: Union[str, Path]) -> np.ndarray:
    """Read an IDX file, transparently un-gzipping it."""
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:2] == _GZIP_MAGIC:
        raw = gzip.decompress(raw)
    return parse_idx(raw)
