"""Feedback law for the retention target.

Once per phase the trainer measures the ratio of training loss to validation
loss and nudges the retention target (the accuracy fraction augmentation is
allowed to cost) toward the value that brings the ratio to its setpoint.

A ratio above the setpoint means training loss is relatively high, so
augmentation should weaken: the retention target rises.  A ratio below the
setpoint lets augmentation strengthen: the target falls.  The gain shrinks
as the target approaches 1 so the loop cannot overshoot out of range.
"""

from __future__ import annotations

import math

STEP_MIN = 0.005
STEP_MAX = 0.1
RETENTION_INIT = 0.9


def update_retention_target(
    retention: float,
    loss_ratio: float,
    setpoint: float,
    step_min: float = STEP_MIN,
    step_max: float = STEP_MAX,
) -> float:
    """One controller update; returns the new retention target in [0, 1].

    The raw step is (1 - retention) / 2 * (ratio - setpoint); its magnitude
    is clamped into [step_min, step_max] unless the error is exactly zero.
    An infinite ratio (validation loss collapsed to 0) takes a full
    step_max upward.
    """
    if not (0.0 <= retention <= 1.0):
        raise ValueError(f"retention target must be in [0, 1], got {retention}")
    if setpoint <= 0.0 or not math.isfinite(setpoint):
        raise ValueError(f"setpoint must be positive and finite, got {setpoint}")
    if math.isnan(loss_ratio) or loss_ratio < 0.0:
        raise ValueError(f"loss ratio must be >= 0, got {loss_ratio}")

    gain = (1.0 - retention) / 2.0
    error = loss_ratio - setpoint
    if error == 0.0:
        return retention
    if math.isinf(loss_ratio):
        step = step_max
    else:
        raw = gain * error
        if raw == 0.0:
            return retention
        step = math.copysign(min(max(abs(raw), step_min), step_max), raw)
    return min(max(retention + step, 0.0), 1.0)


def loss_ratio_from_means(train_losses: list[float], val_losses: list[float]) -> float:
    """Phase loss ratio: mean per-batch training loss over mean per-epoch
    validation loss.  A zero validation mean maps to +inf."""
    if not train_losses or not val_losses:
        raise ValueError("loss ratio needs at least one training and one validation loss")
    train_mean = sum(train_losses) / len(train_losses)
    val_mean = sum(val_losses) / len(val_losses)
    if val_mean == 0.0:
        return math.inf
    return train_mean / val_mean
