import gzip
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from app.exceptions import (
    ContractViolation,
    IdxCountMismatchError,
    IdxMagicError,
    IdxTruncatedError,
)

logger = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

PathLike = Union[str, Path]


@dataclass(frozen=True)
class RawDataset:
    features: np.ndarray
    labels: np.ndarray
    classes: int

    def __post_init__(self):
        X = np.asarray(self.features)
        y = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ContractViolation(f"features {X.shape} and labels {y.shape} disagree")
        if y.size and (y.min() < 0 or y.max() >= self.classes):
            raise ContractViolation(f"labels outside [0, {self.classes})")
        if X.size and (not np.all(np.isfinite(X)) or X.min() < 0.0 or X.max() > 1.0):
            raise ContractViolation("features must be finite and within [0, 1]")
        object.__setattr__(self, "labels", y)

    @property
    def size(self) -> int:
        return int(self.labels.shape[0])

    def subset(self, indices: np.ndarray) -> "RawDataset":
        return RawDataset(self.features[indices], self.labels[indices], self.classes)


def _read_bytes(path: PathLike) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as f:
        return f.read()


def _parse_header(path: PathLike, data: bytes, expected_magic: int) -> Tuple[Tuple[int, ...], int]:
    """Returns (dimension sizes, payload offset)."""
    if len(data) < 4:
        raise IdxTruncatedError(str(path), 4, len(data))
    (magic,) = struct.unpack(">I", data[:4])
    if magic != expected_magic:
        raise IdxMagicError(str(path), magic, expected_magic)

    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(data) < header:
        raise IdxTruncatedError(str(path), header, len(data))
    dims = struct.unpack(">" + "I" * ndim, data[4:header])
    return dims, header


def load_idx(images_path: PathLike, labels_path: PathLike, classes: Optional[int] = None) -> RawDataset:
    """Load an IDX image/label pair; pixels scaled to [0, 1]."""
    image_bytes = _read_bytes(images_path)
    label_bytes = _read_bytes(labels_path)

    dims, offset = _parse_header(images_path, image_bytes, IDX_IMAGES_MAGIC)
    count = dims[0]
    width = int(np.prod(dims[1:]))
    payload = count * width
    if len(image_bytes) - offset < payload:
        raise IdxTruncatedError(str(images_path), payload, len(image_bytes) - offset)

    (label_count,), label_offset = _parse_header(labels_path, label_bytes, IDX_LABELS_MAGIC)
    if len(label_bytes) - label_offset < label_count:
        raise IdxTruncatedError(str(labels_path), label_count, len(label_bytes) - label_offset)
    if label_count != count:
        raise IdxCountMismatchError(count, label_count)

    pixels = np.frombuffer(image_bytes, dtype=np.uint8, count=payload, offset=offset)
    features = pixels.reshape(count, width).astype(np.float32) / np.float32(255.0)
    labels = np.frombuffer(label_bytes, dtype=np.uint8, count=label_count, offset=label_offset).astype(np.int64)

    n_classes = classes if classes is not None else (int(labels.max()) + 1 if label_count else 1)
    logger.info(f"loaded {count} samples x {width} features from {Path(images_path).name}")
    return RawDataset(features=features, labels=labels, classes=n_classes)


def dump_idx(dataset: RawDataset, images_path: PathLike, labels_path: PathLike) -> None:
    """Write features (quantized to bytes) and labels as an IDX pair."""
    count, width = dataset.features.shape
    side = int(round(np.sqrt(width)))
    rows, cols = (side, side) if side * side == width else (1, width)

    pixels = np.clip(np.rint(np.asarray(dataset.features, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    labels = dataset.labels.astype(np.uint8)

    for path, blob in (
        (images_path, struct.pack(">IIII", IDX_IMAGES_MAGIC, count, rows, cols) + pixels.tobytes()),
        (labels_path, struct.pack(">II", IDX_LABELS_MAGIC, count) + labels.tobytes()),
    ):
        path = Path(path)
        opener = gzip.open if path.suffix == ".gz" else open
        with opener(path, "wb") as f:
            f.write(blob)
