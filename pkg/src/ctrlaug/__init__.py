"""ctrlaug: feedback-controlled online data augmentation for image classifiers.

The package trains a classifier while a per-phase feedback loop adapts the
strength distribution of every augmentation operation so that the ratio of
training loss to validation loss tracks a configured setpoint.
"""

from ctrlaug.augpool import (
    ALL_KINDS,
    SIGNED_KINDS,
    OperationKind,
    PlanStep,
    apply_operation,
    apply_operation_batch,
    apply_plan,
    blend_apply,
)
from ctrlaug.asd import (
    StrengthParams,
    sample_plan,
    sample_strength,
    strength_mean,
    trivial_table,
    zero_table,
)
from ctrlaug.controller import loss_ratio_from_means, update_retention_target
from ctrlaug.ror import ErfFit, erfinv, fit_erf, update_all, update_strength_params

__version__ = "0.1.0"

__all__ = [
    "ALL_KINDS",
    "SIGNED_KINDS",
    "OperationKind",
    "PlanStep",
    "apply_operation",
    "apply_operation_batch",
    "apply_plan",
    "blend_apply",
    "StrengthParams",
    "sample_plan",
    "sample_strength",
    "strength_mean",
    "trivial_table",
    "zero_table",
    "loss_ratio_from_means",
    "update_retention_target",
    "ErfFit",
    "erfinv",
    "fit_erf",
    "update_all",
    "update_strength_params",
    "__version__",
]
