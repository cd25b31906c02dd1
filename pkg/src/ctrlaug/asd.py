"""Augmentation strength distributions and per-operation parameter tables.

Each operation draws its strength from a two-parameter family on
[0, max_strength]: a mixture of a uniform density and a linearly increasing
(triangular) density.  The tilt parameter is the triangular mixture weight,
so tilt 0 is plain uniform and tilt 1 concentrates mass near the maximum.

  pdf(g) = (1 / G) * ((1 - tilt) + 2 * tilt * g / G)   for g in [0, G]
  mean   = (1 + tilt / 3) * G / 2

max_strength = 0 degenerates to a point mass at 0 (the identity).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ctrlaug.augpool import ALL_KINDS, SIGNED_KINDS, OperationKind, PlanStep


@dataclass(frozen=True)
class StrengthParams:
    """Distribution parameters for one operation."""

    max_strength: float
    tilt: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.max_strength <= 1.0):
            raise ValueError(f"max_strength must be in [0, 1], got {self.max_strength}")
        if not (0.0 <= self.tilt <= 1.0):
            raise ValueError(f"tilt must be in [0, 1], got {self.tilt}")


Table = dict[OperationKind, StrengthParams]


def zero_table() -> Table:
    """Initial table: every operation pinned to strength 0."""
    return {kind: StrengthParams(0.0, 0.0) for kind in ALL_KINDS}


def trivial_table() -> Table:
    """Uniform strengths on [0, 1] for every operation (no feedback shaping)."""
    return {kind: StrengthParams(1.0, 0.0) for kind in ALL_KINDS}


def strength_pdf(gamma: np.ndarray | float, params: StrengthParams) -> np.ndarray | float:
    """Density of the strength distribution; 0 outside [0, max_strength]."""
    g = np.asarray(gamma, dtype=np.float64)
    G, tilt = params.max_strength, params.tilt
    if G == 0.0:
        raise ValueError("point mass at 0 has no density")
    inside = (g >= 0.0) & (g <= G)
    pdf = ((1.0 - tilt) + 2.0 * tilt * g / G) / G
    out = np.where(inside, pdf, 0.0)
    return float(out) if np.isscalar(gamma) else out


def strength_cdf(gamma: np.ndarray | float, params: StrengthParams) -> np.ndarray | float:
    g = np.asarray(gamma, dtype=np.float64)
    G, tilt = params.max_strength, params.tilt
    if G == 0.0:
        out = np.where(g >= 0.0, 1.0, 0.0)
    else:
        x = np.clip(g / G, 0.0, 1.0)
        out = np.where(g < 0.0, 0.0, (1.0 - tilt) * x + tilt * x * x)
    return float(out) if np.isscalar(gamma) else out


def strength_mean(params: StrengthParams) -> float:
    return (1.0 + params.tilt / 3.0) * params.max_strength / 2.0


def sample_strength(
    rng: np.random.Generator, params: StrengthParams, size: int | None = None
) -> np.ndarray | float:
    """Draw strengths; scalar when size is None.

    Always consumes two uniform draws per sample (branch selector plus
    magnitude) so the stream position is independent of the parameters.
    """
    n = 1 if size is None else int(size)
    pick_tri = rng.random(n) < params.tilt
    mag = rng.random(n)
    vals = params.max_strength * np.where(pick_tri, np.sqrt(mag), mag)
    return float(vals[0]) if size is None else vals


def sample_plan(rng: np.random.Generator, table: Table, n_ops: int) -> list[PlanStep]:
    """Draw n_ops distinct operations with strengths and directions.

    Kinds are drawn uniformly without replacement; signed operations get a
    fair random direction.
    """
    if not (1 <= n_ops <= len(ALL_KINDS)):
        raise ValueError(f"n_ops must be in [1, {len(ALL_KINDS)}], got {n_ops}")
    idx = rng.choice(len(ALL_KINDS), size=n_ops, replace=False)
    plan = []
    for i in idx:
        kind = ALL_KINDS[int(i)]
        gamma = sample_strength(rng, table[kind])
        sign = 1
        if kind in SIGNED_KINDS:
            sign = -1 if rng.random() < 0.5 else 1
        plan.append(PlanStep(kind=kind, gamma=gamma, sign=sign))
    return plan
