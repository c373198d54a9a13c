"""Deterministic synthetic digit/operator corpus in IDX files.

This environment ships no image files, so the package can generate its own:
28x28 grayscale glyphs rendered from 5x7 bitmaps with randomized scale,
thickness, translation, intensity and pixel noise. Digits stand in for the
operand images; ten distinct symbols stand in for the operator images
(class 0 draws a plus, class 1 a minus, matching the operator conventions).
Everything is a pure function of the seed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .datasets import write_idx_images, write_idx_labels
from .rng import Rng

_DIGITS = [
    ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),  # 0
    ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),  # 1
    ("01110", "10001", "00001", "00110", "01000", "10000", "11111"),  # 2
    ("01110", "10001", "00001", "00110", "00001", "10001", "01110"),  # 3
    ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),  # 4
    ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),  # 5
    ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),  # 6
    ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),  # 7
    ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),  # 8
    ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),  # 9
]

# classes 0 and 1 denote the two operations; like the real operator dataset's
# classes they are structurally unrelated shapes, not a one-stroke difference
_SYMBOLS = [
    ("00100", "00100", "11111", "00100", "00100", "01010", "10001"),  # class 0
    ("01110", "10001", "10001", "01110", "10100", "10010", "10001"),  # class 1
    ("00000", "10001", "01010", "00100", "01010", "10001", "00000"),  # x
    ("00001", "00010", "00100", "00100", "00100", "01000", "10000"),  # /
    ("00010", "00100", "01000", "10000", "01000", "00100", "00010"),  # <
    ("01000", "00100", "00010", "00001", "00010", "00100", "01000"),  # >
    ("00100", "01010", "10001", "00000", "00000", "10001", "11111"),  # ^_
    ("11111", "10001", "00000", "00000", "10001", "01010", "00100"),  # ~v
    ("00000", "01110", "10001", "10101", "10001", "01110", "00000"),  # o.
    ("11111", "10001", "10001", "10001", "10001", "10001", "11111"),  # box
]


def _bitmap(rows: tuple[str, ...]) -> np.ndarray:
    return np.array([[c == "1" for c in row] for row in rows], dtype=np.float64)


_DIGIT_MAPS = [_bitmap(g) for g in _DIGITS]
_SYMBOL_MAPS = [_bitmap(g) for g in _SYMBOLS]


def _dilate(g: np.ndarray) -> np.ndarray:
    out = g.copy()
    out[1:, :] = np.maximum(out[1:, :], g[:-1, :])
    out[:-1, :] = np.maximum(out[:-1, :], g[1:, :])
    out[:, 1:] = np.maximum(out[:, 1:], g[:, :-1])
    out[:, :-1] = np.maximum(out[:, :-1], g[:, 1:])
    return out


def _blur(g: np.ndarray) -> np.ndarray:
    padded = np.pad(g, 1)
    acc = np.zeros_like(g)
    for dy in range(3):
        for dx in range(3):
            acc += padded[dy:dy + g.shape[0], dx:dx + g.shape[1]]
    return acc / 9.0


def render_glyph(rng: Rng, glyph: np.ndarray) -> np.ndarray:
    """One randomized 28x28 uint8 rendering of a 5x7 bitmap.

    Glyphs are roughly centered with small jitter, matching the
    size-normalized, centered framing of the MNIST-family files this corpus
    stands in for.
    """
    scale = 2 + rng.below(2)
    g = np.kron(glyph, np.ones((scale, scale)))
    if rng.below(2):
        g = _dilate(g)
    g = _blur(g)
    h, w = g.shape
    jitter = 2
    dy = min(max((28 - h) // 2 + rng.below(2 * jitter + 1) - jitter, 0), 28 - h)
    dx = min(max((28 - w) // 2 + rng.below(2 * jitter + 1) - jitter, 0), 28 - w)
    canvas = np.zeros((28, 28))
    canvas[dy:dy + h, dx:dx + w] = g
    intensity = rng.uniform(0.7, 1.0)
    noise = rng.uniform_array((28, 28), 0.0, 0.04)
    return (np.clip(canvas * intensity + noise, 0.0, 1.0) * 255).astype(np.uint8)


def make_images(rng: Rng, count: int, glyphs: list[np.ndarray]
                ) -> tuple[np.ndarray, np.ndarray]:
    """count images with labels; the first ten cover every class."""
    labels = np.array([i % 10 if i < 10 else rng.below(10) for i in range(count)],
                      dtype=np.uint8)
    images = np.stack([render_glyph(rng, glyphs[c]) for c in labels])
    return images, labels


def memory_corpus(seed: int = 5, n_operand: int = 200, n_operator: int = 60,
                  name: str = "synth-mem"):
    """Small in-memory corpus for tests and gradient checks (no files)."""
    from .datasets import Corpus, ImageDataset  # local import to avoid a cycle
    rng = Rng(seed)
    img, lab = make_images(rng, n_operand, _DIGIT_MAPS)
    operand = ImageDataset(img, lab, name + "-operand")
    img, lab = make_images(rng, n_operator, _SYMBOL_MAPS)
    operator = ImageDataset(img, lab, name + "-operator")
    return Corpus(operand, operator, name)


def generate_corpus_files(out_dir, train_count: int = 12000,
                          test_count: int = 2000, seed: int = 77):
    """Write the standard mnist/ and kmnist/ IDX layout under out_dir."""
    out_dir = Path(out_dir)
    splits = [("train", train_count, ("train-images-idx3-ubyte",
                                      "train-labels-idx1-ubyte")),
              ("test", test_count, ("t10k-images-idx3-ubyte",
                                    "t10k-labels-idx1-ubyte"))]
    for group, glyphs, salt in (("mnist", _DIGIT_MAPS, 0),
                                ("kmnist", _SYMBOL_MAPS, 1)):
        group_dir = out_dir / group
        group_dir.mkdir(parents=True, exist_ok=True)
        for split_i, (_, count, (img_name, lab_name)) in enumerate(splits):
            rng = Rng(seed + 1000 * salt + split_i)
            images, labels = make_images(rng, count, glyphs)
            write_idx_images(group_dir / img_name, images)
            write_idx_labels(group_dir / lab_name, labels)
