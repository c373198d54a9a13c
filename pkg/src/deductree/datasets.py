"""IDX image/label file handling and class-indexed sampling.

The IDX container is the standard MNIST-family layout: a big-endian header
(magic, count, and for images rows/cols), followed by the raw uint8 payload.
KMNIST ships in the identical layout, so one loader serves both. Files ending
in ``.gz`` are decompressed transparently.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import Rng

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
IMAGE_SIDE = 28


class IdxError(ValueError):
    """Malformed IDX file: wrong magic, bad dims, truncated payload."""


def _read_bytes(path) -> bytes:
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as f:
            return f.read()
    return path.read_bytes()


def load_idx_images(path) -> np.ndarray:
    """Parse an IDX image file into a (count, 28, 28) uint8 array."""
    raw = _read_bytes(path)
    if len(raw) < 16:
        raise IdxError(f"{path}: truncated header")
    magic, count, rows, cols = struct.unpack(">iiii", raw[:16])
    if magic != IMAGE_MAGIC:
        raise IdxError(f"{path}: wrong magic 0x{magic:08x} for an image file")
    if rows != IMAGE_SIDE or cols != IMAGE_SIDE:
        raise IdxError(f"{path}: unexpected dims {rows}x{cols}")
    expected = count * rows * cols
    payload = raw[16:]
    if len(payload) != expected:
        raise IdxError(f"{path}: payload {len(payload)} B, expected {expected} B")
    return np.frombuffer(payload, dtype=np.uint8).reshape(count, rows, cols)


def load_idx_labels(path) -> np.ndarray:
    """Parse an IDX label file into a (count,) uint8 array of classes 0-9."""
    raw = _read_bytes(path)
    if len(raw) < 8:
        raise IdxError(f"{path}: truncated header")
    magic, count = struct.unpack(">ii", raw[:8])
    if magic != LABEL_MAGIC:
        raise IdxError(f"{path}: wrong magic 0x{magic:08x} for a label file")
    payload = raw[8:]
    if len(payload) != count:
        raise IdxError(f"{path}: payload {len(payload)} B, expected {count} B")
    labels = np.frombuffer(payload, dtype=np.uint8)
    if count and labels.max() > 9:
        raise IdxError(f"{path}: label {int(labels.max())} out of range 0-9")
    return labels


def write_idx_images(path, images: np.ndarray):
    images = np.ascontiguousarray(images, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">iiii", IMAGE_MAGIC, images.shape[0],
                            IMAGE_SIDE, IMAGE_SIDE))
        f.write(images.tobytes())


def write_idx_labels(path, labels: np.ndarray):
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">ii", LABEL_MAGIC, labels.shape[0]))
        f.write(labels.tobytes())


def normalize(image: np.ndarray) -> np.ndarray:
    """Flatten a 28x28 uint8 image to a float64 vector in [0, 1]."""
    return image.reshape(-1).astype(np.float64) / 255.0


def normalize_batch(images: np.ndarray) -> np.ndarray:
    return images.reshape(images.shape[0], -1).astype(np.float64) / 255.0


@dataclass
class ImageDataset:
    """Immutable image/label pair with a per-class index."""

    images: np.ndarray
    labels: np.ndarray
    name: str
    _by_class: dict[int, np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise IdxError(f"{self.name}: {len(self.images)} images vs "
                           f"{len(self.labels)} labels")
        self._by_class = {c: np.flatnonzero(self.labels == c) for c in range(10)}

    def __len__(self):
        return len(self.labels)

    def class_indices(self, cls: int) -> np.ndarray:
        return self._by_class[cls]

    @classmethod
    def load(cls, images_path, labels_path, name: str) -> "ImageDataset":
        return cls(load_idx_images(images_path), load_idx_labels(labels_path), name)


def sample_by_class(rng: Rng, dataset: ImageDataset, cls: int) -> int:
    """Uniform image index for the given class; deterministic per rng state."""
    idx = dataset.class_indices(cls)
    if len(idx) == 0:
        raise IdxError(f"{dataset.name}: no images of class {cls}")
    return int(idx[rng.below(len(idx))])


# Standard file layout inside a data directory: <dir>/<group>/<split files>.
_SPLIT_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def _find(dirpath: Path, fname: str) -> Path:
    for candidate in (dirpath / fname, dirpath / (fname + ".gz")):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"missing {fname}[.gz] under {dirpath}")


@dataclass
class Corpus:
    """The image sources an episode draws from: operands plus operators."""

    operand: ImageDataset
    operator: ImageDataset | None
    name: str


def load_corpus(data_dir, split: str, with_operators: bool) -> Corpus:
    """Load <data_dir>/mnist and (optionally) <data_dir>/kmnist for one split."""
    if split not in _SPLIT_FILES:
        raise ValueError(f"split must be train or test, got {split!r}")
    data_dir = Path(data_dir)
    img, lab = _SPLIT_FILES[split]
    operand = ImageDataset.load(_find(data_dir / "mnist", img),
                                _find(data_dir / "mnist", lab),
                                f"mnist-{split}")
    operator = None
    if with_operators:
        operator = ImageDataset.load(_find(data_dir / "kmnist", img),
                                     _find(data_dir / "kmnist", lab),
                                     f"kmnist-{split}")
    return Corpus(operand, operator, f"{split}")
