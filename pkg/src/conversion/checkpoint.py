"""Little-endian binary checkpoint container.

Layout: the 8-byte magic ``PALORA01``, an unsigned 64-bit header length, a JSON header
(format version, model spec, optional run config, block directory, step count, schedule
state) and the raw float64 parameter blocks in directory order.
"""

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from pydantic import ValidationError

from src.conversion.exports import atomic_write_bytes
from src.core.constants import Constants
from src.core.exceptions import CheckpointError
from src.models.config import ModelSpec
from src.nn.network import PaLoRANetwork

_LENGTH = struct.Struct("<Q")


@dataclass
class Checkpoint:
    model: PaLoRANetwork
    step: int = 0
    schedule_state: Dict[str, Any] = field(default_factory=dict)
    run_config: Optional[Dict[str, Any]] = None


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    blocks = checkpoint.model.parameters()
    directory = []
    payload = []
    offset = 0
    for name, array in blocks.items():
        data = np.ascontiguousarray(array, dtype="<f8").tobytes()
        directory.append({"name": name, "shape": list(array.shape), "offset": offset, "nbytes": len(data)})
        payload.append(data)
        offset += len(data)

    header = {
        "version": Constants.CHECKPOINT_VERSION,
        "model_spec": checkpoint.model.spec.model_dump(mode="json"),
        "run_config": checkpoint.run_config,
        "blocks": directory,
        "step": checkpoint.step,
        "schedule_state": checkpoint.schedule_state,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return Constants.CHECKPOINT_MAGIC + _LENGTH.pack(len(header_bytes)) + header_bytes + b"".join(payload)


def decode_checkpoint(data: bytes) -> Checkpoint:
    magic = Constants.CHECKPOINT_MAGIC
    if data[: len(magic)] != magic:
        raise CheckpointError("Not a checkpoint: bad magic")
    start = len(magic) + _LENGTH.size
    if len(data) < start:
        raise CheckpointError("Checkpoint header truncated")
    (header_length,) = _LENGTH.unpack(data[len(magic) : start])
    try:
        header = json.loads(data[start : start + header_length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"Checkpoint header is not valid JSON: {e}")

    version = header.get("version")
    if version != Constants.CHECKPOINT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {version}")
    try:
        spec = ModelSpec.model_validate(header["model_spec"])
    except (KeyError, ValidationError) as e:
        raise CheckpointError(f"Checkpoint model spec is invalid: {e}")

    model = PaLoRANetwork.build(spec, seed=0)
    params = model.parameters()
    payload = data[start + header_length :]
    seen = set()
    for entry in header.get("blocks", []):
        name = entry["name"]
        if name not in params:
            raise CheckpointError(f"Unknown parameter block '{name}'")
        shape = tuple(entry["shape"])
        if shape != params[name].shape:
            raise CheckpointError(f"Block '{name}' has shape {shape}, model expects {params[name].shape}")
        nbytes = int(np.prod(shape)) * 8
        if entry["nbytes"] != nbytes or entry["offset"] + nbytes > len(payload):
            raise CheckpointError(f"Block '{name}' byte length does not match its shape")
        raw = payload[entry["offset"] : entry["offset"] + nbytes]
        params[name][...] = np.frombuffer(raw, dtype="<f8").reshape(shape)
        seen.add(name)
    missing = set(params) - seen
    if missing:
        raise CheckpointError(f"Checkpoint is missing blocks: {sorted(missing)}")
    expected = sum(int(entry["nbytes"]) for entry in header.get("blocks", []))
    if len(payload) != expected:
        raise CheckpointError(f"Checkpoint payload is {len(payload)} bytes, blocks describe {expected}")

    return Checkpoint(
        model=model,
        step=int(header.get("step", 0)),
        schedule_state=header.get("schedule_state") or {},
        run_config=header.get("run_config"),
    )


def save_checkpoint(path: Union[str, Path], checkpoint: Checkpoint):
    atomic_write_bytes(path, encode_checkpoint(checkpoint))


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except FileNotFoundError:
        raise CheckpointError(f"Checkpoint '{path}' not found")
    return decode_checkpoint(data)
