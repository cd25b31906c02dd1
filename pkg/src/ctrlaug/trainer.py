"""Training harness: phase-partitioned SGD with feedback-adapted augmentation.

Training runs in phases of a fixed number of epochs.  Within a phase the
augmentation table is frozen.  At each phase boundary the trainer computes
the loss ratio (mean per-batch training loss over mean per-epoch validation
loss), moves the retention target one controller step, sweeps robustness
curves on the validation set, and refits the table for the next phase.

The mode ladder shares this single code path: "none" trains with the all-zero
table (every drawn strength is 0), "fixed-table" freezes a given table, and
"ctrl-a" runs the full loop.  The first two never touch the controller or the
curve sweep.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import torch
from torch import nn

from ctrlaug.asd import StrengthParams, Table, sample_plan, trivial_table, zero_table
from ctrlaug.augpool import ALL_KINDS, SIGNED_KINDS, OperationKind, apply_plan
from ctrlaug.config import RunConfig
from ctrlaug.controller import loss_ratio_from_means, update_retention_target
from ctrlaug.data import (
    Dataset,
    NormStats,
    compute_norm_stats,
    cutout,
    flip_double,
    load_cifar10,
    load_cifar100,
    load_container,
    make_synthetic,
    normalize,
    pad_crop,
    random_hflip,
    random_invert,
    resolve_data_dir,
    split_val,
)
from ctrlaug.models import (
    build_model,
    build_optimizer,
    cosine_lr,
    evaluate_accuracy,
    predict_logits,
    set_lr,
)
from ctrlaug.ror import default_grid, detect_saturation, measure_curves, update_all
from ctrlaug.rngstreams import (
    STREAM_AUGMENT,
    STREAM_AUX,
    STREAM_CUTOUT,
    STREAM_ROR_SIGNS,
    STREAM_SHUFFLE,
    make_rng,
)


def _json_float(x: float | None) -> float | None:
    if x is None or not math.isfinite(x):
        return None
    return float(x)


def table_to_json(table: Table) -> dict[str, list[float]]:
    return {k.value: [p.max_strength, p.tilt] for k, p in table.items()}


def table_from_json(raw: dict[str, list[float]]) -> Table:
    table: Table = {}
    for key, pair in raw.items():
        kind = OperationKind(key)
        table[kind] = StrengthParams(float(pair[0]), float(pair[1]))
    missing = set(ALL_KINDS) - set(table)
    if missing:
        raise ValueError(f"table missing operations: {sorted(k.value for k in missing)}")
    return table


@dataclass
class PhaseRecord:
    phase: int
    epoch_start: int
    epoch_end: int
    train_epoch_losses: list[float]
    val_epoch_losses: list[float]
    loss_ratio: float
    retention: float
    table: Table
    ror_ran: bool
    base_accuracy: float | None
    unreliable: list[str] = field(default_factory=list)
    saturated: bool = False
    measurement_failed: bool = False

    def to_json_dict(self) -> dict:
        return {
            "phase": self.phase,
            "epoch_start": self.epoch_start,
            "epoch_end": self.epoch_end,
            "train_epoch_losses": [_json_float(x) for x in self.train_epoch_losses],
            "val_epoch_losses": [_json_float(x) for x in self.val_epoch_losses],
            "loss_ratio": _json_float(self.loss_ratio),
            "retention": _json_float(self.retention),
            "table": table_to_json(self.table),
            "ror_ran": self.ror_ran,
            "base_accuracy": _json_float(self.base_accuracy),
            "unreliable": sorted(self.unreliable),
            "saturated": self.saturated,
            "measurement_failed": self.measurement_failed,
        }


@dataclass
class TrainResult:
    model: nn.Module
    stats: NormStats
    phases: list[PhaseRecord]
    metrics: dict


def _initial_table(cfg: RunConfig) -> Table:
    mode = cfg.control.mode
    if mode == "none":
        return zero_table()
    if mode == "fixed-table":
        fixed = cfg.control.fixed_table
        return table_from_json(fixed) if fixed else trivial_table()
    return zero_table()  # the feedback loop starts from zero strength


def _augment_batch(
    raw: np.ndarray,
    dataset_indices: np.ndarray,
    table: Table,
    cfg: RunConfig,
    epoch: int,
    batch_index: int,
) -> np.ndarray:
    """Auxiliary transforms, then the drawn per-image operation plans."""
    p = cfg.pipeline
    aux = make_rng(cfg.seed, STREAM_AUX, epoch, batch_index)
    out = random_hflip(aux, raw, p.hflip_p)
    out = random_invert(aux, out, p.invert_p)
    out = pad_crop(aux, out, p.pad)
    if cfg.control.n_ops > 0:
        augmented = np.empty_like(out)
        for j, di in enumerate(dataset_indices):
            rng = make_rng(cfg.seed, STREAM_AUGMENT, epoch, int(di))
            plan = sample_plan(rng, table, cfg.control.n_ops)
            augmented[j] = apply_plan(out[j], plan)
        out = augmented
    return out


def _val_loss(model: nn.Module, images: np.ndarray, labels: np.ndarray, stats: NormStats, batch: int = 500) -> float:
    lossfn = nn.CrossEntropyLoss(reduction="sum")
    model.eval()
    total = 0.0
    with torch.inference_mode():
        for start in range(0, len(images), batch):
            chunk = normalize(images[start : start + batch], stats)
            y = torch.from_numpy(labels[start : start + batch])
            total += float(lossfn(model(torch.from_numpy(chunk)), y))
    return total / len(images)


def make_predictor(model: nn.Module, stats: NormStats, batch: int = 500) -> Callable[[np.ndarray], np.ndarray]:
    def predict(images: np.ndarray) -> np.ndarray:
        preds = []
        for start in range(0, len(images), batch):
            logits = predict_logits(model, normalize(images[start : start + batch], stats))
            preds.append(np.argmax(logits, axis=1))
        return np.concatenate(preds) if preds else np.empty(0, dtype=np.int64)

    return predict


def ror_signs(seed: int, phase: int, n_val: int) -> dict[OperationKind, np.ndarray]:
    """One direction vector per signed operation per phase, reused across the grid."""
    signs = {}
    for kind_index, kind in enumerate(ALL_KINDS):
        if kind not in SIGNED_KINDS:
            continue
        rng = make_rng(seed, STREAM_ROR_SIGNS, phase, kind_index)
        signs[kind] = np.where(rng.random(n_val) < 0.5, -1, 1)
    return signs


def run_training(
    cfg: RunConfig,
    train_ds: Dataset,
    val_ds: Dataset,
    test_ds: Dataset | None = None,
    log_path: str | Path | None = None,
    progress: Callable[[str], None] | None = None,
) -> TrainResult:
    """Train a model under the configured mode and return phase history.

    train_ds and val_ds hold raw images; flip-doubling (when configured)
    happens here.  The validation set serves three roles: per-epoch loss for
    the ratio, the robustness sweep, and final accuracy reporting.
    """
    cfg.validate()
    t0 = time.monotonic()
    say = progress or (lambda msg: None)

    if cfg.pipeline.flip_double:
        train_ds = flip_double(train_ds)
    if cfg.pipeline.normalize_shift == "half":
        base = compute_norm_stats(train_ds.images)
        stats = NormStats((0.5, 0.5, 0.5), base.std)
    else:
        stats = compute_norm_stats(train_ds.images)
    if cfg.pipeline.cutout > min(train_ds.images.shape[1], train_ds.images.shape[2]):
        raise ValueError(
            f"cutout {cfg.pipeline.cutout} exceeds image size {train_ds.images.shape[1:3]}"
        )

    h, w = train_ds.images.shape[1], train_ds.images.shape[2]
    model = build_model(cfg.model.arch, (3, h, w), train_ds.n_classes, cfg.seed)
    optimizer = build_optimizer(model, cfg.optim.lr0, cfg.optim.weight_decay, cfg.optim.momentum)
    lossfn = nn.CrossEntropyLoss()

    table = _initial_table(cfg)
    retention = cfg.control.retention_init
    grid = default_grid(cfg.control.grid_step)
    adaptive = cfg.control.mode == "ctrl-a"

    n = len(train_ds)
    epochs = cfg.optim.epochs
    phase_len = cfg.control.phase_len
    records: list[PhaseRecord] = []
    log_file = open(log_path, "w") if log_path else None

    phase_batch_losses: list[float] = []
    phase_val_losses: list[float] = []
    epoch_train_losses: list[float] = []
    phase_start_epoch = 1
    phase_index = 0

    try:
        for epoch in range(1, epochs + 1):
            set_lr(optimizer, cosine_lr(epoch, epochs, cfg.optim.lr0))
            order = make_rng(cfg.seed, STREAM_SHUFFLE, epoch).permutation(n)
            model.train()
            batch_losses = []
            for batch_index, start in enumerate(range(0, n, cfg.optim.batch_size)):
                idx = order[start : start + cfg.optim.batch_size]
                raw = train_ds.images[idx]
                augmented = _augment_batch(raw, idx, table, cfg, epoch, batch_index)
                batch = normalize(augmented, stats)
                if cfg.pipeline.cutout:
                    cut_rng = make_rng(cfg.seed, STREAM_CUTOUT, epoch, batch_index)
                    batch = cutout(cut_rng, batch, cfg.pipeline.cutout)
                x = torch.from_numpy(batch)
                y = torch.from_numpy(train_ds.labels[idx])
                optimizer.zero_grad()
                loss = lossfn(model(x), y)
                loss.backward()
                optimizer.step()
                batch_losses.append(float(loss.detach()))
            epoch_train_losses.append(sum(batch_losses) / len(batch_losses))
            phase_batch_losses.extend(batch_losses)
            phase_val_losses.append(_val_loss(model, val_ds.images, val_ds.labels, stats))

            boundary = (epoch % phase_len == 0) or (epoch == epochs)
            if not boundary:
                continue

            phase_index += 1
            ratio = loss_ratio_from_means(phase_batch_losses, phase_val_losses)
            ror_ran = False
            base_acc: float | None = None
            unreliable: list[str] = []
            saturated = False
            failed = False
            if adaptive:
                retention = update_retention_target(retention, ratio, cfg.control.setpoint)
                if phase_index % cfg.control.ror_period == 0:
                    signs = ror_signs(cfg.seed, phase_index, len(val_ds))
                    out = measure_curves(
                        make_predictor(model, stats),
                        val_ds.images,
                        val_ds.labels,
                        ALL_KINDS,
                        grid,
                        signs,
                    )
                    ror_ran = True
                    if out is None:
                        failed = True  # zero baseline accuracy: keep the old table
                    else:
                        curves, base_acc = out
                        table, flagged = update_all(curves, retention, table)
                        unreliable = [k.value for k in flagged]
                        saturated = detect_saturation(table, curves, retention)

            record = PhaseRecord(
                phase=phase_index,
                epoch_start=phase_start_epoch,
                epoch_end=epoch,
                train_epoch_losses=list(epoch_train_losses),
                val_epoch_losses=list(phase_val_losses),
                loss_ratio=ratio,
                retention=retention,
                table=dict(table),
                ror_ran=ror_ran,
                base_accuracy=base_acc,
                unreliable=unreliable,
                saturated=saturated,
                measurement_failed=failed,
            )
            records.append(record)
            if log_file:
                log_file.write(json.dumps(record.to_json_dict()) + "\n")
                log_file.flush()
            say(
                f"phase {phase_index} (epochs {phase_start_epoch}-{epoch}): "
                f"ratio {ratio:.4f} retention {retention:.4f}"
                + (" saturated" if saturated else "")
            )
            phase_batch_losses = []
            phase_val_losses = []
            epoch_train_losses = []
            phase_start_epoch = epoch + 1
    finally:
        if log_file:
            log_file.close()

    val_acc = evaluate_accuracy(model, val_ds.images, val_ds.labels, stats, tta=cfg.pipeline.tta)
    test_acc = None
    if test_ds is not None:
        test_acc = evaluate_accuracy(model, test_ds.images, test_ds.labels, stats, tta=cfg.pipeline.tta)
    metrics = {
        "mode": cfg.control.mode,
        "seed": cfg.seed,
        "epochs": epochs,
        "phases": phase_index,
        "final_val_acc": val_acc,
        "final_test_acc": test_acc,
        "final_retention": _json_float(retention),
        "final_loss_ratio": _json_float(records[-1].loss_ratio) if records else None,
        "saturated": records[-1].saturated if records else False,
        "wallclock_s": time.monotonic() - t0,
    }
    return TrainResult(model=model, stats=stats, phases=records, metrics=metrics)


# ---------------------------------------------------------------------------
# dataset assembly


def build_datasets(cfg: RunConfig, data_root: str | Path | None = None) -> tuple[Dataset, Dataset, Dataset]:
    """Materialise (train, val, test) per the data section of the config."""
    d = cfg.data
    if d.source == "synthetic":
        pool = make_synthetic(
            d.synthetic_n + d.synthetic_test_n,
            seed=cfg.seed,
            n_classes=d.synthetic_classes,
            noise=d.synthetic_noise,
        )
        train = pool.subset(np.arange(0, d.synthetic_n))
        test = pool.subset(np.arange(d.synthetic_n, len(pool)))
    elif d.source == "cifar10":
        root = d.path if d.path else data_root
        train = load_cifar10(root, "train")
        test = load_cifar10(root, "test")
    elif d.source == "cifar100":
        root = d.path if d.path else data_root
        train = load_cifar100(root, "train")
        test = load_cifar100(root, "test")
    elif d.source == "container":
        root = Path(d.path) if d.path else resolve_data_dir(data_root)
        train = load_container(root / "train.caraw")
        test = load_container(root / "test.caraw")
    else:
        raise ValueError(f"unknown data source {d.source!r}")

    if d.val_from_train:
        train, val = split_val(train, d.val_size, cfg.seed, from_train=True)
    else:
        _, val = split_val(test, d.val_size, cfg.seed, from_train=False)
    if d.train_subset is not None:
        if d.train_subset > len(train):
            raise ValueError(f"train_subset {d.train_subset} exceeds training set {len(train)}")
        train = train.subset(np.arange(d.train_subset))
    return train, val, test


def run_from_config(
    cfg: RunConfig,
    data_root: str | Path | None = None,
    log_path: str | Path | None = None,
    progress: Callable[[str], None] | None = None,
) -> TrainResult:
    train, val, test = build_datasets(cfg, data_root)
    return run_training(cfg, train, val, test, log_path=log_path, progress=progress)
