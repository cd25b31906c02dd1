"""Unit cases for the retention-target feedback law."""

from __future__ import annotations

import math

import numpy as np
import pytest

from ctrlaug.controller import (
    RETENTION_INIT,
    STEP_MAX,
    STEP_MIN,
    loss_ratio_from_means,
    update_retention_target,
)


def test_default_constants():
    assert RETENTION_INIT == 0.9
    assert STEP_MIN == 0.005
    assert STEP_MAX == 0.1


def test_nominal_step_up():
    # gain (1-0.9)/2 = 0.05, error +0.5 -> raw +0.025, inside the clamp band
    assert update_retention_target(0.9, 2.0, 1.5) == pytest.approx(0.925, abs=1e-15)


def test_small_error_clamps_up_to_min_step():
    # raw 0.05 * 0.02 = 0.001 -> clamped to +0.005
    assert update_retention_target(0.9, 1.52, 1.5) == pytest.approx(0.905, abs=1e-15)


def test_large_error_clamps_down_to_max_step():
    # gain 0.25, error -0.6 -> raw -0.15 -> clamped to -0.1
    assert update_retention_target(0.5, 0.9, 1.5) == pytest.approx(0.4, abs=1e-15)


def test_zero_error_takes_no_step():
    assert update_retention_target(0.7, 1.5, 1.5) == 0.7


def test_zero_gain_at_retention_one():
    # gain is 0 at retention 1, raw step 0, no movement even with error
    assert update_retention_target(1.0, 2.5, 1.5) == 1.0


def test_negative_error_moves_down():
    out = update_retention_target(0.9, 1.0, 1.5)
    assert out == pytest.approx(0.9 - 0.025, abs=1e-15)


def test_infinite_ratio_takes_full_step_up():
    assert update_retention_target(0.5, math.inf, 1.5) == pytest.approx(0.6, abs=1e-15)
    assert update_retention_target(0.95, math.inf, 1.5) == 1.0


def test_stays_in_unit_interval_under_random_updates():
    rng = np.random.default_rng(0)
    retention = 0.9
    for _ in range(100_000):
        ratio = float(rng.uniform(0.0, 4.0))
        retention = update_retention_target(retention, ratio, 1.5)
        assert 0.0 <= retention <= 1.0


def test_input_validation():
    with pytest.raises(ValueError):
        update_retention_target(-0.1, 1.0, 1.5)
    with pytest.raises(ValueError):
        update_retention_target(1.1, 1.0, 1.5)
    with pytest.raises(ValueError):
        update_retention_target(0.5, 1.0, 0.0)
    with pytest.raises(ValueError):
        update_retention_target(0.5, 1.0, -2.0)
    with pytest.raises(ValueError):
        update_retention_target(0.5, -0.5, 1.5)
    with pytest.raises(ValueError):
        update_retention_target(0.5, float("nan"), 1.5)


def test_loss_ratio_from_means():
    assert loss_ratio_from_means([2.0, 4.0], [1.5, 1.5, 3.0]) == pytest.approx(1.5)
    assert loss_ratio_from_means([1.0], [2.0]) == 0.5


def test_loss_ratio_zero_val_is_infinite():
    assert loss_ratio_from_means([1.0, 2.0], [0.0, 0.0]) == math.inf


def test_loss_ratio_needs_data():
    with pytest.raises(ValueError):
        loss_ratio_from_means([], [1.0])
    with pytest.raises(ValueError):
        loss_ratio_from_means([1.0], [])
