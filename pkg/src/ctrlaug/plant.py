"""Synthetic plant: a closed-form stand-in for the training process.

The plant gives every operation an exact robustness curve 1 - a*erf(g/b),
an optional binomial measurement noise model, and a linear map from the mean
drawn augmentation strength to the training loss.  It lets the full feedback
loop (curve measurement, fitting, table update, retention update) run in
milliseconds, with known ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ctrlaug.asd import StrengthParams, Table, strength_mean, zero_table
from ctrlaug.augpool import ALL_KINDS, OperationKind
from ctrlaug.controller import RETENTION_INIT, update_retention_target
from ctrlaug.ror import Curve, default_grid, detect_saturation, update_all
from ctrlaug.rngstreams import STREAM_PLANT, make_rng


@dataclass(frozen=True)
class PlantOpSpec:
    """Ground-truth response of one operation: relative accuracy 1 - a*erf(g/b)."""

    a: float
    b: float

    def response(self, gamma: float) -> float:
        return 1.0 - self.a * math.erf(gamma / self.b)


@dataclass
class PlantConfig:
    ops: dict[OperationKind, PlantOpSpec]
    base_train_loss: float = 1.0
    strength_gain: float = 1.5
    val_loss: float = 1.0
    base_accuracy: float = 0.8
    noisy: bool = False
    virtual_samples: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.val_loss <= 0.0:
            raise ValueError(f"val_loss must be positive, got {self.val_loss}")
        if not (0.0 < self.base_accuracy <= 1.0):
            raise ValueError(f"base_accuracy must be in (0, 1], got {self.base_accuracy}")
        if self.virtual_samples < 1:
            raise ValueError(f"virtual_samples must be >= 1, got {self.virtual_samples}")


def default_plant(seed: int = 0, noisy: bool = False) -> PlantConfig:
    """A mixed pool: some fragile operations, some nearly harmless."""
    rng = make_rng(seed, STREAM_PLANT, 0)
    ops = {}
    for kind in ALL_KINDS:
        a = float(rng.uniform(0.25, 0.9))
        b = float(rng.uniform(0.4, 1.6))
        ops[kind] = PlantOpSpec(a, b)
    return PlantConfig(ops=ops, seed=seed, noisy=noisy)


def mean_table_strength(table: Table) -> float:
    """Mean drawn strength, averaged over the operation pool."""
    if not table:
        raise ValueError("empty table")
    return sum(strength_mean(p) for p in table.values()) / len(table)


def plant_loss_ratio(cfg: PlantConfig, table: Table) -> float:
    """Training loss rises linearly with mean strength; validation loss is flat."""
    train = cfg.base_train_loss + cfg.strength_gain * mean_table_strength(table)
    return train / cfg.val_loss


def plant_measure_curves(
    cfg: PlantConfig, phase: int, grid: list[float] | None = None
) -> tuple[dict[OperationKind, Curve], float]:
    """Robustness curves as the trainer would measure them.

    With noise enabled, accuracies are binomial draws over virtual_samples
    validation points; the returned curves are ratios against the measured
    baseline, exactly like the real measurement path.
    """
    grid = default_grid() if grid is None else grid
    rng = make_rng(cfg.seed, STREAM_PLANT, 1, phase)
    if cfg.noisy:
        base = rng.binomial(cfg.virtual_samples, cfg.base_accuracy) / cfg.virtual_samples
        if base == 0.0:
            base = 1.0 / cfg.virtual_samples  # keep the synthetic loop alive
    else:
        base = cfg.base_accuracy
    curves: dict[OperationKind, Curve] = {}
    for kind, spec in cfg.ops.items():
        points: Curve = [(0.0, 1.0)]
        for gamma in grid:
            p_true = min(max(cfg.base_accuracy * spec.response(gamma), 0.0), 1.0)
            if cfg.noisy:
                acc = rng.binomial(cfg.virtual_samples, p_true) / cfg.virtual_samples
            else:
                acc = p_true
            points.append((float(gamma), acc / base))
        curves[kind] = points
    return curves, float(base)


@dataclass
class PhaseTrace:
    phase: int
    loss_ratio: float
    retention: float
    table: Table
    saturated: bool
    unreliable: frozenset[OperationKind] = field(default_factory=frozenset)


def simulate(
    cfg: PlantConfig,
    setpoint: float,
    phases: int,
    retention_init: float = RETENTION_INIT,
    grid: list[float] | None = None,
) -> list[PhaseTrace]:
    """Run the feedback loop against the plant for a number of phases.

    Each phase mirrors the trainer: the current table produces a loss ratio,
    the controller moves the retention target, and refit curves produce the
    next table.
    """
    if phases < 1:
        raise ValueError(f"phases must be >= 1, got {phases}")
    table = zero_table()
    if set(cfg.ops) != set(table):
        table = {k: StrengthParams(0.0, 0.0) for k in cfg.ops}
    retention = retention_init
    trace: list[PhaseTrace] = []
    for phase in range(1, phases + 1):
        ratio = plant_loss_ratio(cfg, table)
        retention = update_retention_target(retention, ratio, setpoint)
        curves, _ = plant_measure_curves(cfg, phase, grid)
        table, unreliable = update_all(curves, retention, table)
        saturated = detect_saturation(table, curves, retention)
        trace.append(PhaseTrace(phase, ratio, retention, dict(table), saturated, unreliable))
    return trace
