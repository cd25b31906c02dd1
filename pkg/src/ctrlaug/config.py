"""Run configuration: a versioned JSON schema and named presets.

A run is fully reconstructible from (config file, seed, data).  Every knob
that affects training lives here; nothing is read from the environment
except the data directory fallback.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

SCHEMA_VERSION = 1

MODES = ("none", "fixed-table", "ctrl-a")
SOURCES = ("cifar10", "cifar100", "container", "synthetic")
ARCHS = ("linear", "smallconv")
TTA_CHOICES = ("none", "hflip", "invert")
NORM_CHOICES = ("data", "half")


class ConfigError(ValueError):
    pass


@dataclass
class DataSection:
    source: str = "synthetic"
    path: str | None = None  # container file, or root for canonical layouts
    val_size: int = 1000
    val_from_train: bool = True
    train_subset: int | None = None  # cap the training set after the split
    synthetic_n: int = 10_000
    synthetic_test_n: int = 2_000
    synthetic_classes: int = 10
    synthetic_noise: float = 24.0


@dataclass
class ModelSection:
    arch: str = "smallconv"


@dataclass
class OptimSection:
    epochs: int = 60
    batch_size: int = 125
    lr0: float = 0.05
    weight_decay: float = 2.5e-4
    momentum: float = 0.9


@dataclass
class PipelineSection:
    hflip_p: float = 0.0
    invert_p: float = 0.0
    flip_double: bool = True
    pad: int = 4
    cutout: int = 0
    tta: str = "hflip"
    normalize_shift: str = "data"  # "half" pins the channel means to 0.5


@dataclass
class ControlSection:
    mode: str = "ctrl-a"
    setpoint: float = 1.5
    n_ops: int = 2
    retention_init: float = 0.9
    phase_len: int = 5
    ror_period: int = 1  # table refresh every this many phase boundaries
    grid_step: float = 0.1
    fixed_table: dict | None = None  # {op: [max_strength, tilt]}, fixed-table mode only


@dataclass
class RunConfig:
    seed: int = 0
    data: DataSection = field(default_factory=DataSection)
    model: ModelSection = field(default_factory=ModelSection)
    optim: OptimSection = field(default_factory=OptimSection)
    pipeline: PipelineSection = field(default_factory=PipelineSection)
    control: ControlSection = field(default_factory=ControlSection)

    def validate(self) -> "RunConfig":
        d, o, p, c = self.data, self.optim, self.pipeline, self.control
        if d.source not in SOURCES:
            raise ConfigError(f"data.source must be one of {SOURCES}, got {d.source!r}")
        if d.val_size <= 0:
            raise ConfigError(f"data.val_size must be positive, got {d.val_size}")
        if d.train_subset is not None and d.train_subset <= 0:
            raise ConfigError(f"data.train_subset must be positive, got {d.train_subset}")
        if d.source == "synthetic" and d.synthetic_classes < 2:
            raise ConfigError("synthetic data needs at least two classes")
        if self.model.arch not in ARCHS:
            raise ConfigError(f"model.arch must be one of {ARCHS}, got {self.model.arch!r}")
        if o.epochs <= 0:
            raise ConfigError(f"optim.epochs must be positive, got {o.epochs}")
        if o.batch_size <= 0:
            raise ConfigError(f"optim.batch_size must be positive, got {o.batch_size}")
        if o.lr0 <= 0:
            raise ConfigError(f"optim.lr0 must be positive, got {o.lr0}")
        if o.weight_decay < 0:
            raise ConfigError(f"optim.weight_decay must be >= 0, got {o.weight_decay}")
        if not (0.0 <= o.momentum < 1.0):
            raise ConfigError(f"optim.momentum must be in [0, 1), got {o.momentum}")
        if not (0.0 <= p.hflip_p <= 1.0):
            raise ConfigError(f"pipeline.hflip_p must be in [0, 1], got {p.hflip_p}")
        if not (0.0 <= p.invert_p <= 1.0):
            raise ConfigError(f"pipeline.invert_p must be in [0, 1], got {p.invert_p}")
        if p.pad < 0:
            raise ConfigError(f"pipeline.pad must be >= 0, got {p.pad}")
        if p.cutout < 0:
            raise ConfigError(f"pipeline.cutout must be >= 0, got {p.cutout}")
        if p.tta not in TTA_CHOICES:
            raise ConfigError(f"pipeline.tta must be one of {TTA_CHOICES}, got {p.tta!r}")
        if p.normalize_shift not in NORM_CHOICES:
            raise ConfigError(f"pipeline.normalize_shift must be one of {NORM_CHOICES}")
        if c.mode not in MODES:
            raise ConfigError(f"control.mode must be one of {MODES}, got {c.mode!r}")
        if c.setpoint <= 0:
            raise ConfigError(f"control.setpoint must be positive, got {c.setpoint}")
        if not (1 <= c.n_ops <= 15):
            raise ConfigError(f"control.n_ops must be in [1, 15], got {c.n_ops}")
        if not (0.0 <= c.retention_init <= 1.0):
            raise ConfigError(f"control.retention_init must be in [0, 1], got {c.retention_init}")
        if c.phase_len <= 0:
            raise ConfigError(f"control.phase_len must be positive, got {c.phase_len}")
        if c.ror_period <= 0:
            raise ConfigError(f"control.ror_period must be positive, got {c.ror_period}")
        if not (0.0 < c.grid_step <= 1.0):
            raise ConfigError(f"control.grid_step must be in (0, 1], got {c.grid_step}")
        if c.fixed_table is not None:
            if c.mode != "fixed-table":
                raise ConfigError("control.fixed_table is only valid with mode 'fixed-table'")
            from ctrlaug.augpool import OperationKind

            for key, pair in c.fixed_table.items():
                try:
                    OperationKind(key)
                except ValueError as e:
                    raise ConfigError(f"fixed_table has unknown operation {key!r}") from e
                if len(pair) != 2 or not all(0.0 <= float(v) <= 1.0 for v in pair):
                    raise ConfigError(f"fixed_table entry for {key!r} must be two values in [0, 1]")
        return self

    def to_dict(self) -> dict:
        return {"schema": SCHEMA_VERSION, "seed": self.seed} | {
            name: dataclasses.asdict(getattr(self, name))
            for name in ("data", "model", "optim", "pipeline", "control")
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


_SECTIONS = {
    "data": DataSection,
    "model": ModelSection,
    "optim": OptimSection,
    "pipeline": PipelineSection,
    "control": ControlSection,
}


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    schema = raw.get("schema")
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema {schema!r}, expected {SCHEMA_VERSION}")
    known = {"schema", "seed"} | set(_SECTIONS)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs: dict = {"seed": int(raw.get("seed", 0))}
    for name, cls in _SECTIONS.items():
        section = raw.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"config section {name!r} must be an object")
        fields = {f.name for f in dataclasses.fields(cls)}
        bad = set(section) - fields
        if bad:
            raise ConfigError(f"unknown keys in section {name!r}: {sorted(bad)}")
        kwargs[name] = cls(**section)
    return RunConfig(**kwargs).validate()


def load_config(path: str | Path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON: {e}") from e
    return config_from_dict(raw)


def save_config(path: str | Path, cfg: RunConfig) -> None:
    Path(path).write_text(cfg.to_json())


# ---------------------------------------------------------------------------
# presets


def preset(name: str) -> RunConfig:
    """Named training recipes; returned configs are mutable copies."""
    if name not in PRESET_BUILDERS:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESET_BUILDERS)}")
    return PRESET_BUILDERS[name]().validate()


def _standard_cifar10() -> RunConfig:
    return RunConfig(
        data=DataSection(source="cifar10", val_size=1000, val_from_train=False),
        model=ModelSection(arch="smallconv"),
        optim=OptimSection(epochs=200, batch_size=125, lr0=0.1, weight_decay=5e-4),
        pipeline=PipelineSection(hflip_p=0.5, flip_double=False, pad=4, cutout=16, tta="hflip"),
        control=ControlSection(),
    )


def _standard_cifar100() -> RunConfig:
    cfg = _standard_cifar10()
    cfg.data.source = "cifar100"
    return cfg


def _modified_cifar10() -> RunConfig:
    return RunConfig(
        data=DataSection(source="cifar10", val_size=1000, val_from_train=True),
        model=ModelSection(arch="smallconv"),
        optim=OptimSection(epochs=500, batch_size=125, lr0=0.05, weight_decay=2.5e-4),
        pipeline=PipelineSection(flip_double=True, pad=4, cutout=0, tta="hflip"),
        control=ControlSection(),
    )


def _modified_cifar100() -> RunConfig:
    cfg = _modified_cifar10()
    cfg.data.source = "cifar100"
    cfg.optim.weight_decay = 5e-4
    cfg.pipeline.cutout = 16
    return cfg


def _standard_svhn() -> RunConfig:
    return RunConfig(
        data=DataSection(source="container", val_size=1000, val_from_train=False),
        model=ModelSection(arch="smallconv"),
        optim=OptimSection(epochs=200, batch_size=125, lr0=0.005, weight_decay=0.005),
        pipeline=PipelineSection(flip_double=False, pad=0, cutout=16, tta="none"),
        control=ControlSection(),
    )


def _modified_svhn() -> RunConfig:
    return RunConfig(
        data=DataSection(source="container", val_size=1000, val_from_train=True),
        model=ModelSection(arch="smallconv"),
        optim=OptimSection(epochs=300, batch_size=125, lr0=0.005, weight_decay=0.005),
        pipeline=PipelineSection(
            invert_p=0.5, flip_double=False, pad=0, cutout=10, tta="invert", normalize_shift="half"
        ),
        control=ControlSection(),
    )


PRESET_BUILDERS = {
    "standard-cifar10": _standard_cifar10,
    "standard-cifar100": _standard_cifar100,
    "modified-cifar10": _modified_cifar10,
    "modified-cifar100": _modified_cifar100,
    "standard-svhn": _standard_svhn,
    "modified-svhn": _modified_svhn,
}
