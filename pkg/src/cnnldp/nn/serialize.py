"""Flat binary containers for models and 4-D tensors.

Layout: 8-byte magic, little-endian u64 header length, UTF-8 JSON header,
then little-endian float64 payload in declaration order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .model import CnnModel

MODEL_MAGIC = b"CNNLDPM1"
TENSOR_MAGIC = b"CNNLDPT1"


def _write(path, magic: bytes, header: dict, arrays) -> None:
    head = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<Q", len(head)))
        fh.write(head)
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def _read(path, magic: bytes) -> tuple[dict, bytes]:
    raw = Path(path).read_bytes()
    if raw[:8] != magic:
        raise ValueError(f"{path}: bad magic {raw[:8]!r}")
    (n,) = struct.unpack("<Q", raw[8:16])
    return json.loads(raw[16 : 16 + n]), raw[16 + n :]


def save_model(model: CnnModel, path: str | Path) -> None:
    params = list(model.parameters())
    header = {
        "input_shape": list(model.input_shape),
        "layers": model.specs(),
        "params": [[name, list(a.shape)] for name, a in params],
        "metadata": model.metadata,
    }
    _write(path, MODEL_MAGIC, header, [a for _, a in params])


def load_model(path: str | Path) -> CnnModel:
    header, body = _read(path, MODEL_MAGIC)
    model = CnnModel.from_specs(tuple(header["input_shape"]), header["layers"], header["metadata"])
    flat = np.frombuffer(body, dtype="<f8")
    offset = 0
    for (name, arr), (hname, shape) in zip(model.parameters(), header["params"]):
        if name != hname or list(arr.shape) != shape:
            raise ValueError(f"{path}: parameter mismatch {name} vs {hname}")
        arr[...] = flat[offset : offset + arr.size].reshape(arr.shape)
        offset += arr.size
    if offset != flat.size:
        raise ValueError(f"{path}: {flat.size - offset} trailing values")
    return model


def save_tensor(arr: np.ndarray, path: str | Path) -> None:
    _write(path, TENSOR_MAGIC, {"dims": list(arr.shape)}, [arr])


def load_tensor(path: str | Path) -> np.ndarray:
    header, body = _read(path, TENSOR_MAGIC)
    return np.frombuffer(body, dtype="<f8").reshape(header["dims"]).copy()
