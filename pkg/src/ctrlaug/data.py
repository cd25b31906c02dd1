"""Datasets: canonical binary loaders, a raw container format, synthetic data,
validation splits, and the auxiliary (non-pool) pipeline primitives.

Images are kept as uint8 arrays of shape (N, H, W, 3) until the moment a
batch is normalised for the model, so every augmentation operates on raw
pixel values.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ctrlaug.rngstreams import STREAM_SYNTH_DATA, STREAM_VAL_SPLIT, make_rng

DATA_DIR_ENV = "CTRLA_DATA_DIR"

CONTAINER_MAGIC = b"CARAW1"


class DataFormatError(ValueError):
    """Raised when a dataset file is malformed; message carries a byte offset."""


@dataclass
class Dataset:
    images: np.ndarray  # (N, H, W, 3) uint8
    labels: np.ndarray  # (N,) int64
    n_classes: int

    def __post_init__(self) -> None:
        if self.images.ndim != 4 or self.images.shape[3] != 3:
            raise ValueError(f"images must be (N, H, W, 3), got {self.images.shape}")
        if self.images.dtype != np.uint8:
            raise TypeError("images must be uint8")
        if len(self.labels) != len(self.images):
            raise ValueError("images and labels disagree on length")
        if self.n_classes < 2:
            raise ValueError(f"need at least two classes, got {self.n_classes}")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValueError("labels out of range")

    def __len__(self) -> int:
        return len(self.images)

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.images[idx], self.labels[idx], self.n_classes)


def resolve_data_dir(path: str | Path | None) -> Path:
    """Explicit path, else the CTRLA_DATA_DIR environment variable."""
    if path is not None:
        return Path(path)
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        return Path(env)
    raise FileNotFoundError(f"no data directory given and {DATA_DIR_ENV} is not set")


# ---------------------------------------------------------------------------
# canonical binary layouts


def _read_records(raw: bytes, path: Path, label_bytes: int, n_classes: int, label_index: int) -> Dataset:
    record = label_bytes + 3072
    if len(raw) % record != 0:
        offset = len(raw) - (len(raw) % record)
        raise DataFormatError(f"{path}: truncated record at byte {offset}, file size {len(raw)}")
    n = len(raw) // record
    if n == 0:
        raise DataFormatError(f"{path}: no records")
    buf = np.frombuffer(raw, dtype=np.uint8).reshape(n, record)
    labels = buf[:, label_index].astype(np.int64)
    pixels = buf[:, label_bytes:]
    # channel-planar: 1024 red, 1024 green, 1024 blue, each row-major 32x32
    images = pixels.reshape(n, 3, 32, 32).transpose(0, 2, 3, 1).copy()
    return Dataset(images, labels, n_classes)


def load_cifar10(root: str | Path | None = None, split: str = "train") -> Dataset:
    """CIFAR-10 binary batches (1 label byte + 3072 channel-planar pixels)."""
    base = resolve_data_dir(root)
    d = base / "cifar-10-batches-bin"
    if not d.is_dir():
        d = base
    names = [f"data_batch_{i}.bin" for i in range(1, 6)] if split == "train" else ["test_batch.bin"]
    parts = []
    for name in names:
        path = d / name
        if not path.is_file():
            raise FileNotFoundError(f"missing CIFAR-10 batch: {path}")
        parts.append(_read_records(path.read_bytes(), path, 1, 10, 0))
    return Dataset(
        np.concatenate([p.images for p in parts]),
        np.concatenate([p.labels for p in parts]),
        10,
    )


def load_cifar100(root: str | Path | None = None, split: str = "train") -> Dataset:
    """CIFAR-100 binary (coarse then fine label byte; fine labels used)."""
    base = resolve_data_dir(root)
    d = base / "cifar-100-binary"
    if not d.is_dir():
        d = base
    path = d / ("train.bin" if split == "train" else "test.bin")
    if not path.is_file():
        raise FileNotFoundError(f"missing CIFAR-100 file: {path}")
    return _read_records(path.read_bytes(), path, 2, 100, 1)


# ---------------------------------------------------------------------------
# raw container


def save_container(path: str | Path, ds: Dataset) -> None:
    """Write a dataset as magic, counts, then label byte + H*W*3 pixels per record."""
    if ds.n_classes > 256:
        raise ValueError("container labels are single bytes; need n_classes <= 256")
    n, h, w, _ = ds.images.shape
    with open(path, "wb") as f:
        f.write(CONTAINER_MAGIC)
        f.write(struct.pack("<IIII", n, h, w, ds.n_classes))
        for i in range(n):
            f.write(struct.pack("B", int(ds.labels[i])))
            f.write(ds.images[i].tobytes())


def load_container(path: str | Path) -> Dataset:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < len(CONTAINER_MAGIC) or raw[: len(CONTAINER_MAGIC)] != CONTAINER_MAGIC:
        raise DataFormatError(f"{path}: bad magic at byte 0, expected {CONTAINER_MAGIC!r}")
    header_end = len(CONTAINER_MAGIC) + 16
    if len(raw) < header_end:
        raise DataFormatError(f"{path}: truncated header at byte {len(raw)}")
    n, h, w, n_classes = struct.unpack("<IIII", raw[len(CONTAINER_MAGIC) : header_end])
    if h == 0 or w == 0:
        raise DataFormatError(f"{path}: zero-sized images in header")
    record = 1 + h * w * 3
    expect = header_end + n * record
    if len(raw) != expect:
        offset = min(len(raw), expect)
        raise DataFormatError(
            f"{path}: expected {expect} bytes for {n} records, got {len(raw)} (problem at byte {offset})"
        )
    buf = np.frombuffer(raw, dtype=np.uint8, offset=header_end).reshape(n, record)
    labels = buf[:, 0].astype(np.int64)
    images = buf[:, 1:].reshape(n, h, w, 3).copy()
    return Dataset(images, labels, n_classes)


# ---------------------------------------------------------------------------
# synthetic data


def make_synthetic(
    n: int, seed: int, h: int = 32, w: int = 32, n_classes: int = 10, noise: float = 24.0
) -> Dataset:
    """Learnable synthetic images: smooth per-class colour templates plus
    per-sample brightness jitter and pixel noise.

    Same seed gives the same class templates regardless of n, so train and
    test draws from different seeds share the underlying task only when the
    caller samples them from one generator; use one call and split instead.
    """
    rng = make_rng(seed, STREAM_SYNTH_DATA, 0)
    cells = 4
    templates = rng.uniform(40.0, 215.0, size=(n_classes, cells, cells, 3))
    # bilinear upsample of the coarse template grid to full resolution
    ys = np.linspace(0, cells - 1, h)
    xs = np.linspace(0, cells - 1, w)
    y0 = np.floor(ys).astype(int).clip(0, cells - 2)
    x0 = np.floor(xs).astype(int).clip(0, cells - 2)
    fy = (ys - y0)[None, :, None, None]
    fx = (xs - x0)[None, None, :, None]
    t = templates
    smooth = (
        t[:, y0][:, :, x0] * (1 - fy) * (1 - fx)
        + t[:, y0][:, :, x0 + 1] * (1 - fy) * fx
        + t[:, y0 + 1][:, :, x0] * fy * (1 - fx)
        + t[:, y0 + 1][:, :, x0 + 1] * fy * fx
    )
    labels = rng.integers(0, n_classes, size=n)
    jitter = rng.uniform(-20.0, 20.0, size=(n, 1, 1, 1))
    pixel_noise = rng.normal(0.0, noise, size=(n, h, w, 3))
    images = smooth[labels] + jitter + pixel_noise
    return Dataset(
        np.clip(np.round(images), 0, 255).astype(np.uint8),
        labels.astype(np.int64),
        n_classes,
    )


# ---------------------------------------------------------------------------
# splits


def split_val(ds: Dataset, val_size: int, seed: int, from_train: bool = True) -> tuple[Dataset, Dataset]:
    """Split off a validation set.

    from_train=True removes a random subset (seeded); otherwise the first
    val_size records are taken in file order, as for a held-out test file.
    """
    if not (0 < val_size < len(ds)):
        raise ValueError(f"val_size must be in (0, {len(ds)}), got {val_size}")
    if from_train:
        rng = make_rng(seed, STREAM_VAL_SPLIT, 0)
        perm = rng.permutation(len(ds))
        val_idx = np.sort(perm[:val_size])
        rest_idx = np.sort(perm[val_size:])
        return ds.subset(rest_idx), ds.subset(val_idx)
    idx = np.arange(len(ds))
    return ds.subset(idx[val_size:]), ds.subset(idx[:val_size])


def flip_double(ds: Dataset) -> Dataset:
    """Append a horizontally mirrored copy of every image (doubles the set)."""
    mirrored = ds.images[:, :, ::-1, :]
    return Dataset(
        np.concatenate([ds.images, mirrored]),
        np.concatenate([ds.labels, ds.labels]),
        ds.n_classes,
    )


# ---------------------------------------------------------------------------
# auxiliary pipeline primitives (not part of the adapted pool)


def random_hflip(rng: np.random.Generator, imgs: np.ndarray, p: float) -> np.ndarray:
    if p == 0.0:
        return imgs
    flip = rng.random(len(imgs)) < p
    out = imgs.copy()
    out[flip] = out[flip, :, ::-1, :]
    return out


def random_invert(rng: np.random.Generator, imgs: np.ndarray, p: float) -> np.ndarray:
    """Pixelwise negation (255 - v) with probability p per image."""
    if p == 0.0:
        return imgs
    inv = rng.random(len(imgs)) < p
    out = imgs.copy()
    out[inv] = 255 - out[inv]
    return out


def pad_crop(rng: np.random.Generator, imgs: np.ndarray, pad: int) -> np.ndarray:
    """Zero-pad by `pad` on every side, then crop back at a random offset."""
    if pad == 0:
        return imgs
    n, h, w, _ = imgs.shape
    padded = np.pad(imgs, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    ys = rng.integers(0, 2 * pad + 1, size=n)
    xs = rng.integers(0, 2 * pad + 1, size=n)
    out = np.empty_like(imgs)
    for i in range(n):
        out[i] = padded[i, ys[i] : ys[i] + h, xs[i] : xs[i] + w, :]
    return out


@dataclass(frozen=True)
class NormStats:
    mean: tuple[float, float, float]
    std: tuple[float, float, float]


def compute_norm_stats(images: np.ndarray) -> NormStats:
    """Per-channel mean and std of pixel values scaled to [0, 1]."""
    f = images.astype(np.float64) / 255.0
    mean = f.mean(axis=(0, 1, 2))
    std = f.std(axis=(0, 1, 2))
    std = np.where(std == 0.0, 1.0, std)
    return NormStats(tuple(float(m) for m in mean), tuple(float(s) for s in std))


def normalize(imgs: np.ndarray, stats: NormStats) -> np.ndarray:
    """uint8 (N, H, W, 3) to float32 (N, 3, H, W), channelwise standardised."""
    f = imgs.astype(np.float32) / np.float32(255.0)
    mean = np.asarray(stats.mean, dtype=np.float32)
    std = np.asarray(stats.std, dtype=np.float32)
    out = (f - mean) / std
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def cutout(rng: np.random.Generator, batch: np.ndarray, size: int) -> np.ndarray:
    """Zero a size x size square (clipped at borders) at a uniform centre.

    Operates on normalised (N, C, H, W) tensors, so the hole is exactly zero
    in feature space rather than mid-gray in pixel space.
    """
    if size == 0:
        return batch
    n, _, h, w = batch.shape
    if size > h or size > w:
        raise ValueError(f"cutout size {size} exceeds image {h}x{w}")
    cy = rng.integers(0, h, size=n)
    cx = rng.integers(0, w, size=n)
    half = size // 2
    out = batch.copy()
    for i in range(n):
        y0 = max(int(cy[i]) - half, 0)
        x0 = max(int(cx[i]) - half, 0)
        y1 = min(int(cy[i]) - half + size, h)
        x1 = min(int(cx[i]) - half + size, w)
        out[i, :, y0:y1, x0:x1] = 0.0
    return out
