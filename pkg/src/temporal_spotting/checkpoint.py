"""Model checkpoints: a binary tensor container plus a JSON sidecar.

Container layout (little-endian)::

    b"SPKT" | u32 version=1 | u32 record count
    per record: u16 name length | UTF-8 name | u8 rank | u32 dims[rank] | f32 payload

The sidecar (same stem, ``.json``) carries the architecture needed to rebuild
the model before the tensors are loaded.
"""

import json
import logging
import struct
from dataclasses import asdict
from pathlib import Path
from typing import Any

import numpy as np

from .errors import BadMagicError, DataFormatError, TruncatedPayloadError, UnsupportedVersionError
from .model import ModelConfig, SpottingModel
from .pooling import PoolSpec, TemporalWindow

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"SPKT"
CHECKPOINT_VERSION = 1


def sidecar_path(path: Path) -> Path:
    return Path(path).with_suffix(".json")


def config_to_dict(config: ModelConfig) -> dict[str, Any]:
    data = asdict(config)
    data["class_names"] = list(config.class_names)
    return data


def config_from_dict(data: dict[str, Any]) -> ModelConfig:
    data = dict(data)
    data["pool"] = PoolSpec(**data["pool"])
    data["window"] = TemporalWindow(**data["window"])
    data["class_names"] = tuple(data.get("class_names", ()))
    return ModelConfig(**data)


def save_checkpoint(model: SpottingModel, path: str | Path) -> Path:
    """
    Write tensors to ``path`` and the architecture to its ``.json`` sidecar.

    Returns:
        The tensor file path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    chunks = [struct.pack("<4sII", CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(model.params))]
    for name, value in model.params.items():
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack(f"<B{value.ndim}I", value.ndim, *value.shape))
        chunks.append(np.ascontiguousarray(value, dtype="<f4").tobytes())
    path.write_bytes(b"".join(chunks))

    sidecar = {"format_version": CHECKPOINT_VERSION, "model": config_to_dict(model.config)}
    sidecar_path(path).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    logger.info("saved checkpoint path=%s tensors=%d", path, len(model.params))
    return path


class _Reader:
    def __init__(self, path: Path, data: bytes) -> None:
        self.path = path
        self.data = data
        self.pos = 0

    def take(self, size: int) -> bytes:
        end = self.pos + size
        if end > len(self.data):
            raise TruncatedPayloadError(str(self.path), end, len(self.data))
        out = self.data[self.pos : end]
        self.pos = end
        return out

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_tensors(path: str | Path) -> dict[str, np.ndarray]:
    """
    Parse a checkpoint container into float64 arrays.

    Raises:
        BadMagicError, UnsupportedVersionError, TruncatedPayloadError
    """
    path = Path(path)
    reader = _Reader(path, path.read_bytes())
    magic, version, count = reader.unpack("<4sII")
    if magic != CHECKPOINT_MAGIC:
        raise BadMagicError(f"{path}: expected magic {CHECKPOINT_MAGIC!r}, found {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise UnsupportedVersionError(f"{path}: checkpoint version {version} is not supported")

    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = reader.unpack("<H")
        try:
            name = reader.take(name_len).decode("utf-8")
        except UnicodeDecodeError as e:
            raise DataFormatError(f"{path}: record name is not UTF-8: {e}") from e
        (rank,) = reader.unpack("<B")
        dims = reader.unpack(f"<{rank}I")
        size = int(np.prod(dims, dtype=np.int64))
        payload = reader.take(4 * size)
        tensors[name] = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(dims)
    return tensors


def load_checkpoint(path: str | Path) -> SpottingModel:
    """Rebuild a model from its tensor file and sidecar."""
    path = Path(path)
    try:
        sidecar = json.loads(sidecar_path(path).read_text())
    except json.JSONDecodeError as e:
        raise DataFormatError(f"Invalid JSON in {sidecar_path(path)}: {e}") from e
    config = config_from_dict(sidecar["model"])
    return SpottingModel(config, read_tensors(path))
