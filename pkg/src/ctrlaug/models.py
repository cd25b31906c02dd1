"""Classifier models, optimiser setup, snapshot format, and evaluation.

Two tiny architectures cover the desk-scale regime: a linear softmax probe
and a three-block convolutional network.  Both run on CPU; convolutional
forward/backward uses channels-last memory format, which is markedly faster
with oneDNN.

Snapshot format (magic "CTRLA1"): for each state tensor, little-endian
u32 name length, UTF-8 name, u32 rank, u32 per-dimension sizes, then the
float32 row-major data.  Tensors are written in state-dict order and read
until end of file.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path
from typing import Iterator

import numpy as np
import torch
from torch import nn

SNAPSHOT_MAGIC = b"CTRLA1"


class SnapshotFormatError(ValueError):
    """Raised for malformed snapshot files; message carries a byte offset."""


class LinearSoftmax(nn.Module):
    """Flatten, one linear layer, softmax via the loss."""

    def __init__(self, in_shape: tuple[int, int, int], n_classes: int):
        super().__init__()
        c, h, w = in_shape
        self.flatten = nn.Flatten()
        self.fc = nn.Linear(c * h * w, n_classes)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.fc(self.flatten(x))


class SmallConvNet(nn.Module):
    """Three conv-bn-relu-pool blocks (32, 64, 128 wide), global average pool."""

    def __init__(self, n_classes: int):
        super().__init__()
        blocks = []
        widths = [3, 32, 64, 128]
        for cin, cout in zip(widths[:-1], widths[1:]):
            blocks += [
                nn.Conv2d(cin, cout, kernel_size=3, padding=1, bias=False),
                nn.BatchNorm2d(cout),
                nn.ReLU(inplace=True),
                nn.AvgPool2d(2),
            ]
        self.features = nn.Sequential(*blocks)
        self.head = nn.Linear(128, n_classes)
        self.to(memory_format=torch.channels_last)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x.contiguous(memory_format=torch.channels_last)
        z = self.features(x)
        z = z.mean(dim=(2, 3))
        return self.head(z)


def build_model(arch: str, in_shape: tuple[int, int, int], n_classes: int, seed: int) -> nn.Module:
    torch.manual_seed(seed)
    if arch == "linear":
        return LinearSoftmax(in_shape, n_classes)
    if arch == "smallconv":
        return SmallConvNet(n_classes)
    raise ValueError(f"unknown architecture: {arch!r}")


def build_optimizer(model: nn.Module, lr: float, weight_decay: float, momentum: float = 0.9) -> torch.optim.Optimizer:
    """Nesterov momentum SGD with weight decay folded into the gradient."""
    return torch.optim.SGD(
        model.parameters(), lr=lr, momentum=momentum, nesterov=True, weight_decay=weight_decay
    )


def cosine_lr(epoch: int, n_epochs: int, lr0: float) -> float:
    """Half-cosine decay over global 1-based epochs: lr0 at epoch 1,
    lr0/2*(1+cos(pi*(n-1)/n_max)) thereafter."""
    if not (1 <= epoch <= n_epochs):
        raise ValueError(f"epoch {epoch} outside [1, {n_epochs}]")
    return lr0 / 2.0 * (1.0 + math.cos(math.pi * (epoch - 1) / n_epochs))


def set_lr(optimizer: torch.optim.Optimizer, lr: float) -> None:
    for group in optimizer.param_groups:
        group["lr"] = lr


# ---------------------------------------------------------------------------
# snapshots


def save_snapshot(path: str | Path, model: nn.Module) -> None:
    with open(path, "wb") as f:
        f.write(SNAPSHOT_MAGIC)
        for name, tensor in model.state_dict().items():
            data = tensor.detach().to(torch.float32).contiguous().cpu().numpy()
            encoded = name.encode("utf-8")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<I", data.ndim))
            for dim in data.shape:
                f.write(struct.pack("<I", dim))
            f.write(data.astype("<f4").tobytes())


def _read_exact(f, n: int, what: str) -> bytes:
    offset = f.tell()
    raw = f.read(n)
    if len(raw) != n:
        raise SnapshotFormatError(f"truncated {what} at byte {offset}: wanted {n} bytes, got {len(raw)}")
    return raw


def iter_snapshot(path: str | Path) -> Iterator[tuple[str, np.ndarray]]:
    """Yield (name, float32 array) entries until end of file."""
    with open(path, "rb") as f:
        magic = f.read(len(SNAPSHOT_MAGIC))
        if magic != SNAPSHOT_MAGIC:
            raise SnapshotFormatError(f"bad magic at byte 0: {magic!r}, expected {SNAPSHOT_MAGIC!r}")
        while True:
            head = f.read(4)
            if not head:
                return
            if len(head) != 4:
                raise SnapshotFormatError(f"truncated name length at byte {f.tell() - len(head)}")
            (name_len,) = struct.unpack("<I", head)
            name = _read_exact(f, name_len, "name").decode("utf-8")
            (rank,) = struct.unpack("<I", _read_exact(f, 4, "rank"))
            dims = [struct.unpack("<I", _read_exact(f, 4, "dimension"))[0] for _ in range(rank)]
            count = int(np.prod(dims, dtype=np.int64)) if dims else 1
            data = np.frombuffer(_read_exact(f, 4 * count, f"data for {name}"), dtype="<f4")
            yield name, data.reshape(dims).copy()


def load_snapshot(path: str | Path, model: nn.Module) -> None:
    state = model.state_dict()
    seen = set()
    for name, array in iter_snapshot(path):
        if name not in state:
            raise SnapshotFormatError(f"snapshot tensor {name!r} not in model")
        expect = tuple(state[name].shape)
        if tuple(array.shape) != expect:
            raise SnapshotFormatError(f"shape mismatch for {name!r}: file {array.shape}, model {expect}")
        state[name] = torch.from_numpy(array).to(state[name].dtype)
        seen.add(name)
    missing = set(state) - seen
    if missing:
        raise SnapshotFormatError(f"snapshot missing tensors: {sorted(missing)}")
    model.load_state_dict(state)


# ---------------------------------------------------------------------------
# evaluation


def predict_logits(model: nn.Module, batch: np.ndarray) -> np.ndarray:
    """Normalised float32 (N, 3, H, W) batch to logits, eval mode, no grad."""
    model.eval()
    with torch.inference_mode():
        logits = model(torch.from_numpy(batch))
    return logits.numpy()


def evaluate_accuracy(
    model: nn.Module,
    images: np.ndarray,
    labels: np.ndarray,
    stats,
    tta: str = "none",
    batch_size: int = 500,
) -> float:
    """Accuracy on raw uint8 images.

    tta="hflip" or "invert" averages logits of the original and transformed
    copies (transform applied to raw pixels, before normalisation).  Ties in
    the averaged logits resolve to the lowest class index.
    """
    from ctrlaug.data import normalize  # local import to avoid a cycle

    if tta not in ("none", "hflip", "invert"):
        raise ValueError(f"unknown test-time augmentation: {tta!r}")
    correct = 0
    for start in range(0, len(images), batch_size):
        chunk = images[start : start + batch_size]
        logits = predict_logits(model, normalize(chunk, stats)).astype(np.float64)
        if tta == "hflip":
            logits = logits + predict_logits(model, normalize(chunk[:, :, ::-1, :].copy(), stats))
        elif tta == "invert":
            logits = logits + predict_logits(model, normalize(255 - chunk, stats))
        pred = np.argmax(logits, axis=1)
        correct += int(np.sum(pred == labels[start : start + batch_size]))
    return correct / len(images)


def count_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
