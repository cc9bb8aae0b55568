"""Dataset ingestion and preprocessing.

Sources: IDX files (MNIST family; big-endian, magics 0x00000803 images /
0x00000801 labels) and CSV rasters with rows "label,p0..p783". Images are
28x28 bytes. Preprocessing reduces a raster to the encoder's input size:
16x16 bilinear resize (256 features) for amplitude, a grid of block means
(default 2x4, 8 features) for angle, both min-max normalized to [0,1].

Degenerate min-max rule for constant images: angle features become all
zeros; amplitude features become the uniform vector when the constant is
nonzero and are rejected when the image is all zero (no valid direction).
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from .encoding import FeatureVector

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
IMAGE_SIDE = 28


@dataclass
class RawDataset:
    """Byte rasters plus class ids, before any filtering or preprocessing."""

    images: np.ndarray  # (n, 28, 28) uint8
    labels: np.ndarray  # (n,) int64
    source: str = ""

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.uint8)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 3 or self.images.shape[1:] != (IMAGE_SIDE, IMAGE_SIDE):
            raise ValueError(f"images must be (n, 28, 28), got {self.images.shape}")
        if self.labels.shape != (self.images.shape[0],):
            raise ValueError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels"
            )

    def __len__(self):
        return self.images.shape[0]


@dataclass(frozen=True)
class Sample:
    """One preprocessed sample: features plus a remapped label in 0..3."""

    features: FeatureVector
    label: int

    def __post_init__(self):
        if not 0 <= int(self.label) < 4:
            raise ValueError(f"label must be in 0..3, got {self.label}")
        object.__setattr__(self, "label", int(self.label))


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

def _read_exact(f, n, path, what):
    buf = f.read(n)
    if len(buf) != n:
        raise ValueError(f"{path}: truncated file while reading {what}")
    return buf


def load_idx(images_path, labels_path) -> RawDataset:
    """Parse an IDX image/label file pair."""
    with open(images_path, "rb") as f:
        magic, count, rows, cols = struct.unpack(">iiii", _read_exact(f, 16, images_path, "header"))
        if magic != IDX_IMAGES_MAGIC:
            raise ValueError(f"{images_path}: bad magic 0x{magic:08x} for an IDX image file")
        if (rows, cols) != (IMAGE_SIDE, IMAGE_SIDE):
            raise ValueError(f"{images_path}: expected 28x28 images, got {rows}x{cols}")
        raw = _read_exact(f, count * rows * cols, images_path, "pixel data")
        images = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows, cols)
    with open(labels_path, "rb") as f:
        magic, n_labels = struct.unpack(">ii", _read_exact(f, 8, labels_path, "header"))
        if magic != IDX_LABELS_MAGIC:
            raise ValueError(f"{labels_path}: bad magic 0x{magic:08x} for an IDX label file")
        labels = np.frombuffer(_read_exact(f, n_labels, labels_path, "labels"), dtype=np.uint8)
    if count != n_labels:
        raise ValueError(f"count mismatch: {count} images vs {n_labels} labels")
    return RawDataset(images=images, labels=labels.astype(np.int64), source=str(images_path))


def load_csv(path) -> RawDataset:
    """Parse rows of "label,p0..p783" into 28x28 rasters."""
    images, labels = [], []
    with open(path, newline="") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 1 + IMAGE_SIDE * IMAGE_SIDE:
                raise ValueError(
                    f"{path}:{lineno}: expected {1 + IMAGE_SIDE * IMAGE_SIDE} columns, got {len(row)}"
                )
            try:
                values = [int(c) for c in row]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric cell") from exc
            if not all(0 <= v <= 255 for v in values[1:]):
                raise ValueError(f"{path}:{lineno}: pixel outside 0..255")
            labels.append(values[0])
            images.append(np.array(values[1:], dtype=np.uint8).reshape(IMAGE_SIDE, IMAGE_SIDE))
    if not images:
        raise ValueError(f"{path}: no data rows")
    return RawDataset(images=np.stack(images), labels=np.array(labels, dtype=np.int64),
                      source=str(path))


def filter_split(ds: RawDataset, classes) -> RawDataset:
    """Keep only ``classes`` and remap labels to 0..3 in the order given."""
    classes = tuple(int(c) for c in classes)
    if len(classes) != 4 or len(set(classes)) != 4:
        raise ValueError(f"need 4 distinct class ids, got {classes}")
    remap = {c: i for i, c in enumerate(classes)}
    mask = np.isin(ds.labels, classes)
    labels = np.array([remap[int(l)] for l in ds.labels[mask]], dtype=np.int64)
    return RawDataset(images=ds.images[mask], labels=labels, source=ds.source)


def split_train_test(ds: RawDataset, test_fraction: float, seed: int):
    """Deterministic disjoint shuffle split; returns (train, test)."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = len(ds)
    perm = np.random.default_rng(seed).permutation(n)
    n_test = int(round(n * test_fraction))
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    return (
        RawDataset(ds.images[train_idx], ds.labels[train_idx], ds.source),
        RawDataset(ds.images[test_idx], ds.labels[test_idx], ds.source),
    )


# ---------------------------------------------------------------------------
# preprocessing
# ---------------------------------------------------------------------------

def bilinear_resize(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with half-pixel-center sampling, edges clamped."""
    img = np.asarray(image, dtype=np.float64)
    in_h, in_w = img.shape

    def axis_coords(n_out, n_in):
        coords = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        lo = np.clip(np.floor(coords), 0, n_in - 1).astype(np.int64)
        hi = np.clip(lo + 1, 0, n_in - 1)
        frac = np.clip(coords - lo, 0.0, 1.0)
        return lo, hi, frac

    y0, y1, fy = axis_coords(out_h, in_h)
    x0, x1, fx = axis_coords(out_w, in_w)
    top = img[np.ix_(y0, x0)] * (1 - fx) + img[np.ix_(y0, x1)] * fx
    bottom = img[np.ix_(y1, x0)] * (1 - fx) + img[np.ix_(y1, x1)] * fx
    return top * (1 - fy[:, None]) + bottom * fy[:, None]


def block_means(image: np.ndarray, grid=(2, 4)) -> np.ndarray:
    """Mean over a grid of equal blocks, flattened row-major."""
    img = np.asarray(image, dtype=np.float64)
    gh, gw = grid
    h, w = img.shape
    if h % gh or w % gw:
        raise ValueError(f"grid {grid} does not tile a {h}x{w} image")
    return img.reshape(gh, h // gh, gw, w // gw).mean(axis=(1, 3)).ravel()


def _minmax(values: np.ndarray, degenerate: str) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi > lo:
        return (values - lo) / (hi - lo)
    if degenerate == "zeros":
        return np.zeros_like(values)
    # amplitude rule: constant nonzero maps to the uniform direction
    if hi == 0.0:
        raise ValueError("all-zero image cannot be amplitude-encoded")
    return values / hi


def preprocess(raster: np.ndarray, target: str, angle_grid=(2, 4)) -> FeatureVector:
    """Reduce a 28x28 raster to the feature vector of the chosen encoder."""
    img = np.asarray(raster, dtype=np.float64)
    if img.shape != (IMAGE_SIDE, IMAGE_SIDE):
        raise ValueError(f"expected a 28x28 raster, got {img.shape}")
    if target == "amplitude":
        resized = bilinear_resize(img, 16, 16)
        return FeatureVector(_minmax(resized.ravel(), degenerate="uniform"))
    if target == "angle":
        return FeatureVector(_minmax(block_means(img, angle_grid), degenerate="zeros"))
    raise ValueError(f"unknown encoder target {target!r}")


def make_samples(ds: RawDataset, target: str) -> list:
    """Preprocess every raster of a (filtered) dataset into Samples."""
    return [Sample(preprocess(img, target), int(lbl)) for img, lbl in zip(ds.images, ds.labels)]


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------

def synthetic_clusters(n_train: int, n_test: int, seed: int, n_classes: int = 4,
                       dim: int = 256, noise: float = 0.05):
    """Linearly separable 4-class point clouds around random centers in [0,1]^dim.

    Returns (train, test) lists of Samples with balanced class counts.
    """
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.1, 0.9, size=(n_classes, dim))

    def draw(n):
        samples = []
        for i in range(n):
            label = i % n_classes
            x = centers[label] + rng.normal(0.0, noise, size=dim)
            samples.append(Sample(FeatureVector(np.clip(x, 0.0, 1.0)), label))
        return samples

    return draw(n_train), draw(n_test)
