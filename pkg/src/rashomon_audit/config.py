"""Run configuration.

A config file is YAML (JSON is valid YAML).  Unknown keys and bad values
are reported with the line they appear on.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .zoo import FAMILIES


@dataclass
class DataConfig:
    path: str = ""
    label_column: str = "label"
    test_path: str | None = None
    test_fraction: float = 0.2
    delimiter: str = ","
    label_map: dict | None = None
    impute: bool = False
    one_hot: bool = False
    name: str | None = None


@dataclass
class ShapOptions:
    background_size: int = 64
    nsamples: int = 2048
    enum_threshold: int = 12
    explain_max: int | None = None  # cap on explained test rows (stratified); None = whole test set
    evaluator: str = "auto"


@dataclass
class SimilarityOptions:
    j_list: list = field(default_factory=lambda: [1, 3, 5])
    mas_mode: str = "feature"  # "feature" | "scalar"
    pairing: str = "fold-average"  # "fold-average" | "per-fold"
    topj_mode: str = "population"  # "population" | "instance"


@dataclass
class AuditConfig:
    data: DataConfig = field(default_factory=DataConfig)
    seed: int = 0
    folds: int = 10
    top_k: int = 3
    epsilon: float = 0.05
    sizes: list | None = None  # explicit grid; default powers of two up to the train size
    nested: bool = True
    families: list = field(default_factory=lambda: list(FAMILIES))
    budget: int = 20
    retune_per_size: bool = False
    shap: ShapOptions = field(default_factory=ShapOptions)
    similarity: SimilarityOptions = field(default_factory=SimilarityOptions)
    alpha: float = 0.05
    save_attributions: bool = True

    def validate(self):
        _check(self.folds >= 2, "folds", "must be >= 2")
        _check(self.top_k >= 2, "top_k", "must be >= 2 (bagging needs two members)")
        _check(self.epsilon >= 0, "epsilon", "must be >= 0")
        _check(self.budget >= 1, "budget", "must be >= 1")
        _check(0 < self.alpha < 1, "alpha", "must lie in (0, 1)")
        _check(0 < self.data.test_fraction < 1, "data.test_fraction", "must lie in (0, 1)")
        bad = [f for f in self.families if f not in FAMILIES]
        _check(not bad, "families", f"unknown families {bad}; choose from {list(FAMILIES)}")
        _check(len(set(self.families)) >= self.top_k, "families", f"need at least top_k={self.top_k} families")
        _check(self.shap.background_size >= 1, "shap.background_size", "must be >= 1")
        _check(self.shap.evaluator in ("auto", "generic"), "shap.evaluator", "must be 'auto' or 'generic'")
        _check(self.shap.explain_max is None or self.shap.explain_max >= 1, "shap.explain_max", "must be >= 1")
        _check(self.similarity.mas_mode in ("feature", "scalar"), "similarity.mas_mode", "must be feature|scalar")
        _check(self.similarity.pairing in ("fold-average", "per-fold"), "similarity.pairing",
               "must be fold-average|per-fold")
        _check(self.similarity.topj_mode in ("population", "instance"), "similarity.topj_mode",
               "must be population|instance")
        _check(all(int(j) >= 1 for j in self.similarity.j_list), "similarity.j_list", "entries must be >= 1")
        if self.sizes is not None:
            s = [int(v) for v in self.sizes]
            _check(s == sorted(set(s)) and s and s[0] >= 2, "sizes", "must be strictly ascending and >= 2")
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _check(ok, key, msg, line=None):
    if not ok:
        where = f"line {line}: " if line else ""
        raise ConfigError(f"{where}{key}: {msg}")


_SECTIONS = {"data": DataConfig, "shap": ShapOptions, "similarity": SimilarityOptions}


def _lines(node, prefix=""):
    """Map dotted keys to source line numbers from a YAML node tree."""
    out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = f"{prefix}{k.value}"
            out[key] = k.start_mark.line + 1
            out.update(_lines(v, key + "."))
    return out


def _coerce(cls, raw: dict, lines: dict, prefix=""):
    names = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        dotted = f"{prefix}{key}"
        if key not in names:
            _check(False, dotted, f"unknown field (expected one of {sorted(names)})", lines.get(dotted))
        if key in _SECTIONS and cls is AuditConfig:
            _check(isinstance(value, dict), dotted, "must be a mapping", lines.get(dotted))
            kwargs[key] = _coerce(_SECTIONS[key], value, lines, dotted + ".")
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{prefix or 'config'}: {exc}") from None


def config_from_dict(raw: dict, lines: dict | None = None) -> AuditConfig:
    lines = lines or {}
    cfg = _coerce(AuditConfig, raw or {}, lines)
    try:
        return cfg.validate()
    except ConfigError as exc:
        key = str(exc).split(":")[0]
        if key in lines and not str(exc).startswith("line"):
            raise ConfigError(f"line {lines[key]}: {exc}") from None
        raise


def load_config(path) -> AuditConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark else ""
        raise ConfigError(f"{path}: {where}{getattr(exc, 'problem', exc)}") from None
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(raw or {}, _lines(node) if node is not None else {})
