"""Relative operation robustness: measuring and fitting accuracy-vs-strength.

For each operation the trainer sweeps a strength grid over the validation
set and records the accuracy relative to the unaugmented baseline.  The
resulting curve is summarised by a one-minus-scaled-erf model

    r_hat(g) = 1 - a * erf(g / b)

whose two parameters then determine the operation's next strength
distribution: the maximum strength is where the fitted curve crosses the
retention target, and the tilt rescues extra mass near full strength when
even strength 1 stays above the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ctrlaug.asd import StrengthParams, Table
from ctrlaug.augpool import OperationKind, apply_operation_batch

Curve = list[tuple[float, float]]

A_MAX = 2.0
B_MAX = 10.0
RMSE_UNRELIABLE = 0.15
_BISECT_TOL = 1e-10


def default_grid(step: float = 0.1) -> list[float]:
    """Strength grid (0 excluded; the curve gets (0, 1) for free)."""
    if not (0.0 < step <= 1.0):
        raise ValueError(f"grid step must be in (0, 1], got {step}")
    n = int(round(1.0 / step))
    return [round(i * step, 10) for i in range(1, n + 1)]


def erfinv(y: float) -> float:
    """Inverse error function by bisection on math.erf, |erf(x) - y| <= 1e-10."""
    if not -1.0 < y < 1.0:
        raise ValueError(f"erfinv needs |y| < 1, got {y}")
    if y < 0.0:
        return -erfinv(-y)
    if y == 0.0:
        return 0.0
    lo, hi = 0.0, 6.0
    # erf(6) is 1 to double precision, so y < 1 always brackets
    while hi - lo > _BISECT_TOL:
        mid = (lo + hi) / 2.0
        if math.erf(mid) < y:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


@dataclass(frozen=True)
class ErfFit:
    a: float
    b: float
    rmse: float

    def predict(self, gamma: float) -> float:
        return 1.0 - self.a * math.erf(gamma / self.b)


def _best_a(e: np.ndarray, r: np.ndarray) -> float:
    denom = float(np.dot(e, e))
    if denom == 0.0:
        return 0.0
    return float(np.clip(np.dot(e, r) / denom, 0.0, A_MAX))


def _rmse_at(b: float, gammas: np.ndarray, resid: np.ndarray) -> tuple[float, float]:
    e = np.array([math.erf(g / b) for g in gammas])
    a = _best_a(e, resid)
    return float(np.sqrt(np.mean((resid - a * e) ** 2))), a


def fit_erf(points: Curve) -> ErfFit:
    """Least-squares fit of 1 - a*erf(g/b) to (strength, relative accuracy).

    a is solved in closed form (clipped to [0, 2]) for each candidate b; b is
    located by a coarse log-spaced scan over (0, 10] refined with golden
    section.  A curve that never drops below 1 fits exactly with a = 0 and is
    pinned to b = 10.
    """
    if len(points) < 2:
        raise ValueError("need at least two points to fit")
    gammas = np.array([p[0] for p in points], dtype=np.float64)
    rel = np.array([p[1] for p in points], dtype=np.float64)
    resid = 1.0 - rel

    nonzero = gammas > 0.0
    if not np.any(nonzero):
        raise ValueError("need at least one point with strength > 0")
    g_nz = gammas[nonzero]
    r_nz = resid[nonzero]

    if np.all(r_nz <= 0.0):
        # accuracy never dropped below baseline: a = 0 fits, b pinned high
        return ErfFit(0.0, B_MAX, _full_rmse(0.0, B_MAX, gammas, resid))

    candidates = np.geomspace(0.02, B_MAX, 60)
    scores = [_rmse_at(b, g_nz, r_nz)[0] for b in candidates]
    best = int(np.argmin(scores))
    lo = candidates[max(best - 1, 0)]
    hi = candidates[min(best + 1, len(candidates) - 1)]

    # golden-section refinement of b on [lo, hi]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1 = _rmse_at(x1, g_nz, r_nz)[0]
    f2 = _rmse_at(x2, g_nz, r_nz)[0]
    for _ in range(80):
        if hi - lo < 1e-7:
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = _rmse_at(x1, g_nz, r_nz)[0]
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = _rmse_at(x2, g_nz, r_nz)[0]
    b = (lo + hi) / 2.0
    _, a = _rmse_at(b, g_nz, r_nz)
    return ErfFit(a, b, _full_rmse(a, b, gammas, resid))


def _full_rmse(a: float, b: float, gammas: np.ndarray, resid: np.ndarray) -> float:
    pred = a * np.array([math.erf(g / b) for g in gammas])
    return float(np.sqrt(np.mean((resid - pred) ** 2)))


def update_max_strength(a: float, b: float, retention: float) -> float:
    """Strength where the fitted curve crosses the retention target.

    If even full strength retains more than the target, the maximum is 1.
    Otherwise solve 1 - a*erf(g/b) = retention for g, clamped to [0, 1].
    A retention target of 1 forces strength 0 whenever the curve drops at
    all (a > 0).
    """
    if not (0.0 <= retention <= 1.0):
        raise ValueError(f"retention target must be in [0, 1], got {retention}")
    if a == 0.0:
        return 1.0
    predicted_full = 1.0 - a * math.erf(1.0 / b)
    if predicted_full > retention:
        return 1.0
    y = (1.0 - retention) / a
    if y >= 1.0:
        return 1.0
    return min(max(b * erfinv(y), 0.0), 1.0)


def update_tilt(max_strength: float, measured_full: float, retention: float) -> float:
    """Tilt from the measured relative accuracy at full strength.

    Only a table entry already at maximum strength earns tilt: the excess of
    the measured full-strength retention over the target, normalised by the
    remaining headroom, clamped to [0, 1].
    """
    if max_strength < 1.0:
        return 0.0
    if retention >= 1.0:
        return 1.0 if measured_full >= 1.0 else 0.0
    return min(max((measured_full - retention) / (1.0 - retention), 0.0), 1.0)


def update_strength_params(fit: ErfFit, measured_full: float, retention: float) -> StrengthParams:
    g = update_max_strength(fit.a, fit.b, retention)
    return StrengthParams(g, update_tilt(g, measured_full, retention))


def update_all(
    curves: dict[OperationKind, Curve],
    retention: float,
    prev_table: Table,
) -> tuple[Table, frozenset[OperationKind]]:
    """Refit every operation and build the next table.

    An operation whose fit misses badly (rmse > 0.15) keeps its previous
    parameters and is reported in the returned set.
    """
    table: Table = {}
    unreliable = set()
    for kind, curve in curves.items():
        fit = fit_erf(curve)
        if fit.rmse > RMSE_UNRELIABLE:
            table[kind] = prev_table[kind]
            unreliable.add(kind)
            continue
        measured_full = curve[-1][1]
        table[kind] = update_strength_params(fit, measured_full, retention)
    return table, frozenset(unreliable)


def detect_saturation(
    table: Table, curves: dict[OperationKind, Curve], retention: float
) -> bool:
    """True when every operation is pinned at full strength and even the
    measured full-strength accuracy stays at or above the retention target;
    further lowering of the target cannot strengthen augmentation."""
    for kind, params in table.items():
        if params.max_strength < 1.0:
            return False
        if kind in curves and curves[kind][-1][1] < retention:
            return False
    return True


def measure_curves(
    predict: Callable[[np.ndarray], np.ndarray],
    images: np.ndarray,
    labels: np.ndarray,
    kinds: Sequence[OperationKind],
    grid: Sequence[float],
    signs_by_kind: dict[OperationKind, np.ndarray],
) -> tuple[dict[OperationKind, Curve], float] | None:
    """Sweep the strength grid on a held-out set and return relative curves.

    predict maps a uint8 image batch to predicted labels.  Directions for
    signed operations are drawn once per operation by the caller and reused
    across the grid.  Returns None when baseline accuracy is zero, in which
    case no curve is meaningful and the caller keeps its previous table.
    """
    labels = np.asarray(labels)
    base_acc = float(np.mean(predict(images) == labels))
    if base_acc == 0.0:
        return None
    curves: dict[OperationKind, Curve] = {}
    for kind in kinds:
        signs = signs_by_kind.get(kind)
        points: Curve = [(0.0, 1.0)]
        for gamma in grid:
            if signs is None:
                augmented = apply_operation_batch(images, kind, gamma)
                correct = predict(augmented) == labels
            else:
                correct = np.zeros(len(images), dtype=bool)
                for sign in (1, -1):
                    mask = signs == sign
                    if not np.any(mask):
                        continue
                    augmented = apply_operation_batch(images[mask], kind, gamma, sign)
                    correct[mask] = predict(augmented) == labels[mask]
            points.append((float(gamma), float(np.mean(correct)) / base_acc))
        curves[kind] = points
    return curves, base_acc
