"""Canonical byte encoding, hashing, and raster containers.

Every artifact the engine persists goes through ``canonical_dumps`` so that
hashes are stable across platforms and runs: UTF-8, sorted keys, compact
separators, no NaN/Infinity.  Rasters (images, depth maps, audio) use a small
documented binary container instead of JSON.

Raster container layout (little-endian throughout):

    offset  size  field
    0       4     magic ``b"DFR1"``
    4       2     dtype code length N
    6       N     dtype string, ascii (numpy dtype .str, e.g. ``<f4``)
    6+N     1     number of dimensions D (uint8)
    7+N     8*D   shape, uint64 per dimension
    ...           raw array bytes, C order
"""

from __future__ import annotations

import base64
import hashlib
import json
import struct
from typing import Any

import numpy as np

FORMAT_VERSION = 1

_MAGIC = b"DFR1"


def to_jsonable(obj: Any) -> Any:
    """Recursively convert domain values into plain JSON-able python."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        if not np.isfinite(obj):
            raise ValueError("non-finite float in canonical payload")
        return obj
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return to_jsonable(float(obj))
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if hasattr(obj, "value") and not isinstance(obj, type):  # Enum
        return to_jsonable(obj.value)
    raise TypeError(f"cannot canonicalize {type(obj)!r}")


def canonical_dumps(obj: Any) -> str:
    return json.dumps(
        to_jsonable(obj),
        sort_keys=True,
        ensure_ascii=False,
        separators=(",", ":"),
        allow_nan=False,
    )


def canonical_bytes(obj: Any) -> bytes:
    return canonical_dumps(obj).encode("utf-8")


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def hash_of(obj: Any) -> str:
    """Hash of the canonical encoding of a JSON-able object."""
    return sha256_hex(canonical_bytes(obj))


def write_json(path, obj: Any) -> str:
    """Write an object canonically; returns the content hash."""
    data = canonical_bytes(obj)
    with open(path, "wb") as fh:
        fh.write(data)
    return sha256_hex(data)


def read_json(path) -> Any:
    with open(path, "rb") as fh:
        return json.loads(fh.read().decode("utf-8"))


# --- raster container -------------------------------------------------------

def raster_to_bytes(arr: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(arr)
    dtype_str = arr.dtype.newbyteorder("<").str.encode("ascii")
    head = _MAGIC + struct.pack("<H", len(dtype_str)) + dtype_str
    head += struct.pack("<B", arr.ndim)
    head += b"".join(struct.pack("<Q", s) for s in arr.shape)
    return head + arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes(order="C")


def raster_from_bytes(data: bytes) -> np.ndarray:
    if data[:4] != _MAGIC:
        raise ValueError("bad raster magic")
    (n,) = struct.unpack_from("<H", data, 4)
    dtype = np.dtype(data[6 : 6 + n].decode("ascii"))
    off = 6 + n
    (ndim,) = struct.unpack_from("<B", data, off)
    off += 1
    shape = struct.unpack_from("<" + "Q" * ndim, data, off)
    off += 8 * ndim
    arr = np.frombuffer(data[off:], dtype=dtype).reshape(shape)
    return arr.copy()


def write_raster(path, arr: np.ndarray) -> str:
    data = raster_to_bytes(arr)
    with open(path, "wb") as fh:
        fh.write(data)
    return sha256_hex(data)


def read_raster(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return raster_from_bytes(fh.read())


def raster_to_wire(arr: np.ndarray) -> dict:
    """JSON-safe raster encoding used on provider/sidecar wires."""
    return {"raster_b64": base64.b64encode(raster_to_bytes(arr)).decode("ascii")}


def raster_from_wire(obj: dict) -> np.ndarray:
    return raster_from_bytes(base64.b64decode(obj["raster_b64"]))


def is_wire_raster(obj: Any) -> bool:
    return isinstance(obj, dict) and set(obj.keys()) == {"raster_b64"}
