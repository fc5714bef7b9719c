"""Run configuration and its flat ``key = value`` text format.

Example::

    # comments start with '#'
    seed = 7
    augment.method = gan
    gan.epochs = 500
    gan.g_hidden = 64, 64
    classifier.kind = forest

Keys are dotted; unknown keys, duplicate keys and unparsable values are
errors. Lists are comma-separated. Every stage seed is derived from the
single top-level ``seed``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .classifiers import ClassifierSpec
from .dataset import SynthBenchConfig
from .errors import ConfigError
from .gan import GanConfig
from .rng import derive_seed
from .samplers import METHODS, AugmentSpec

STAGES = ("data", "split", "augment", "gan", "classifier")


def _int_list(text):
    return [int(v) for v in text.replace("[", "").replace("]", "").split(",") if v.strip()]


def _str_list(text):
    return [v.strip() for v in text.replace("[", "").replace("]", "").split(",") if v.strip()]


def _bool(text):
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text):
    return None if text.lower() in ("auto", "none", "sqrt") else float(text)


def _str(text):
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


SCHEMA = {
    "seed": int,
    "test_fraction": float,
    "data.csv": _str,
    "data.label_column": _str,
    "synth.n_features": int,
    "synth.n_train": int,
    "synth.n_test": int,
    "synth.imbalance_ratio": float,
    "synth.class_separation": float,
    "augment.method": _str,
    "augment.target_ratio": float,
    "augment.smote_k": int,
    "gan.noise_dim": int,
    "gan.noise_kind": _str,
    "gan.g_hidden": _int_list,
    "gan.d_hidden": _int_list,
    "gan.lr_g": float,
    "gan.lr_d": float,
    "gan.batch_size": int,
    "gan.epochs": int,
    "gan.d_steps_per_g_step": int,
    "classifier.kind": _str,
    "classifier.mlp_hidden": _int_list,
    "classifier.lr": float,
    "classifier.epochs": int,
    "classifier.batch_size": int,
    "classifier.forest_trees": int,
    "classifier.forest_max_depth": int,
    "classifier.forest_feature_frac": _opt_float,
    "classifier.forest_bootstrap": _bool,
    "classifier.threshold": float,
    "matrix.methods": _str_list,
    "matrix.seeds": _int_list,
}


@dataclass
class RunConfig:
    seed: int = 0
    test_fraction: float = 0.3
    data_csv: str | None = None
    label_column: str = "label"
    synth: SynthBenchConfig | None = field(default_factory=SynthBenchConfig)
    augment: AugmentSpec = field(default_factory=AugmentSpec)
    gan: GanConfig = field(default_factory=GanConfig)
    classifier: ClassifierSpec = field(default_factory=ClassifierSpec)
    methods: list = field(default_factory=lambda: list(METHODS))
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])

    def stage_seed(self, stage):
        return derive_seed(self.seed, stage)

    def seeds_used(self):
        return {"seed": self.seed, **{s: self.stage_seed(s) for s in STAGES}}

    def resolved(self) -> "RunConfig":
        """Copy with every nested seed filled in from ``seed``."""
        cfg = dataclasses.replace(
            self,
            augment=dataclasses.replace(self.augment, notes=[]),
            gan=dataclasses.replace(self.gan, seed=self.stage_seed("gan")),
            classifier=dataclasses.replace(self.classifier,
                                           seed=self.stage_seed("classifier")),
        )
        cfg.augment.seed = self.stage_seed("augment")
        cfg.augment.gan_config = cfg.gan
        if cfg.synth is not None:
            cfg.synth = dataclasses.replace(self.synth, seed=self.stage_seed("data"))
        return cfg

    def with_overrides(self, seed=None, method=None) -> "RunConfig":
        cfg = dataclasses.replace(self)
        if seed is not None:
            cfg.seed = seed
        if method is not None:
            cfg.augment = dataclasses.replace(self.augment, method=method, notes=[])
        return cfg

    def validate(self):
        if (self.data_csv is None) == (self.synth is None):
            raise ConfigError("exactly one data source is required: data.csv or synth.*")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {list(METHODS)}")
        try:
            self.augment.validate()
            self.gan.validate()
            self.classifier.validate()
            if self.synth is not None:
                self.synth.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def to_flat(self) -> dict:
        """Dotted-key view of the reproducibility-relevant settings."""
        out = {"seed": self.seed, "test_fraction": self.test_fraction}
        if self.data_csv is not None:
            out["data.csv"] = self.data_csv
            out["data.label_column"] = self.label_column
        else:
            for k, v in dataclasses.asdict(self.synth).items():
                if k != "seed":
                    out[f"synth.{k}"] = v
        out["augment.method"] = self.augment.method
        out["augment.target_ratio"] = self.augment.target_ratio
        out["augment.smote_k"] = self.augment.smote_k
        for k, v in dataclasses.asdict(self.gan).items():
            if k != "seed":
                out[f"gan.{k}"] = v
        for k, v in dataclasses.asdict(self.classifier).items():
            if k != "seed":
                out[f"classifier.{k}"] = v
        return out


def parse_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = SCHEMA[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    return values


def from_values(values: dict) -> RunConfig:
    unknown = set(values) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    cfg = RunConfig()
    synth_keys = {k: v for k, v in values.items() if k.startswith("synth.")}
    if "data.csv" in values:
        if synth_keys:
            raise ConfigError("data.csv and synth.* are mutually exclusive")
        cfg.synth = None
        cfg.data_csv = values["data.csv"]
    elif "data.label_column" in values:
        raise ConfigError("data.label_column given without data.csv")
    targets = {"synth": cfg.synth, "augment": cfg.augment, "gan": cfg.gan,
               "classifier": cfg.classifier}
    for key, value in values.items():
        head, _, tail = key.partition(".")
        if key == "seed":
            cfg.seed = value
        elif key == "test_fraction":
            cfg.test_fraction = value
        elif key == "data.label_column":
            cfg.label_column = value
        elif key == "data.csv":
            pass
        elif key == "matrix.methods":
            cfg.methods = value
        elif key == "matrix.seeds":
            cfg.seeds = value
        else:
            setattr(targets[head], tail, value)
    return cfg.validate()


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg = from_values(parse_text(text))
    if cfg.data_csv is not None and not Path(cfg.data_csv).is_absolute():
        cfg.data_csv = str(path.parent / cfg.data_csv)
    return cfg


def dump_text(cfg: RunConfig) -> str:
    lines = []
    for key, value in cfg.to_flat().items():
        if isinstance(value, list):
            value = ", ".join(str(v) for v in value)
        elif value is None:
            value = "auto"
        lines.append(f"{key} = {value}")
    lines.append("matrix.methods = " + ", ".join(cfg.methods))
    lines.append("matrix.seeds = " + ", ".join(str(s) for s in cfg.seeds))
    return "\n".join(lines) + "\n"
