"""Sectioned key-value run configuration.

One INI file drives the whole pipeline; unknown sections or keys are errors so
typos cannot silently fall back to defaults. Relative paths are resolved
against the directory containing the configuration file.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from . import techniques as T
from .errors import ConfigError
from .policy import MODE_RB_RADAR, PolicyConfig
from .rules import RuleConfig
from .synth import DEFAULT_PLANT_PROBS, SynthConfig
from .training import DEFAULT_FRACTIONS, DEFAULT_MAX_DEPTH_GRID, DEFAULT_MIN_LEAF_GRID

DEFAULT_TRAIN_SEEDS = (101, 102, 103, 104, 105)


def _norm(technique_id: str) -> str:
    return technique_id.replace(".", "_").lower()


_TECH_BY_NORM = {_norm(tid): tid for tid in T.CATALOG}

_RULE_THRESHOLD_KEYS = (
    "t1071_egress_multiplier",
    "t1590_fanout_threshold",
    "t1550_kerberos_bytes_threshold",
    "t1570_transfer_bytes_threshold",
    "t1105_download_bytes_threshold",
)

_KNOWN_KEYS = {
    "paths": {"flow_file", "label_manifest", "model_dir", "output_dir"},
    "rules": set(_RULE_THRESHOLD_KEYS) | {f"enable_{n}" for n in _TECH_BY_NORM},
    "policy": {"policy", "theta_t", "theta_f", "theta_p", "mode"},
    "split": {"train_fraction", "validation_fraction", "test_fraction", "seed"},
    "train": {"seeds", "max_depth_grid", "min_leaf_grid"},
    "synth": {
        "n_malicious", "n_benign", "flows_min", "flows_max", "separation",
        "seed", "suppress_incidental", "dataset",
    } | {f"plant_{n}_malicious" for n in _TECH_BY_NORM}
      | {f"plant_{n}_benign" for n in _TECH_BY_NORM},
}


@dataclass
class RunConfig:
    flow_file: Path = Path("flows.tsv")
    label_manifest: Path = Path("labels.tsv")
    model_dir: Path = Path("models")
    output_dir: Path = Path("out")
    rules: RuleConfig = field(default_factory=RuleConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    split_fractions: tuple[float, float, float] = DEFAULT_FRACTIONS
    split_seed: int = 7
    train_seeds: tuple[int, ...] = DEFAULT_TRAIN_SEEDS
    max_depth_grid: int = DEFAULT_MAX_DEPTH_GRID
    min_leaf_grid: tuple[int, ...] = DEFAULT_MIN_LEAF_GRID
    synth: SynthConfig = field(default_factory=SynthConfig)

    def __post_init__(self):
        if not self.train_seeds:
            raise ConfigError("train seeds must not be empty")


def _get(parser, section, key, convert, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        return convert(raw)
    except (ValueError, TypeError):
        raise ConfigError(f"[{section}] {key}: cannot parse '{raw}'") from None


def _bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(raw)


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(part.strip()) for part in raw.split(",") if part.strip())


def load_run_config(path) -> RunConfig:
    """Parse and validate a run configuration file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"configuration file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from None

    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown configuration section [{section}]")
        unknown = set(parser.options(section)) - _KNOWN_KEYS[section]
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")

    base = path.parent

    def _path(key: str, default: str) -> Path:
        raw = _get(parser, "paths", key, str, default)
        candidate = Path(raw)
        return candidate if candidate.is_absolute() else base / candidate

    enabled = {tid: True for tid in T.CATALOG}
    if parser.has_section("rules"):
        for norm, tid in _TECH_BY_NORM.items():
            enabled[tid] = _get(parser, "rules", f"enable_{norm}", _bool, True)
    rules = RuleConfig(
        t1071_egress_multiplier=_get(parser, "rules", "t1071_egress_multiplier", float, 3.0),
        t1590_fanout_threshold=_get(parser, "rules", "t1590_fanout_threshold", int, 10),
        t1550_kerberos_bytes_threshold=_get(
            parser, "rules", "t1550_kerberos_bytes_threshold", int, 2048),
        t1570_transfer_bytes_threshold=_get(
            parser, "rules", "t1570_transfer_bytes_threshold", int, 65536),
        t1105_download_bytes_threshold=_get(
            parser, "rules", "t1105_download_bytes_threshold", int, 1048576),
        enabled=enabled,
    )

    mode = _get(parser, "policy", "mode", str, "radar").strip().lower()
    if mode == "rb_radar":
        mode = MODE_RB_RADAR
    policy = PolicyConfig(
        policy=_get(parser, "policy", "policy", str, "p1").strip().lower(),
        theta_t=_get(parser, "policy", "theta_t", int, 1),
        theta_f=_get(parser, "policy", "theta_f", int, 1),
        theta_p=_get(parser, "policy", "theta_p", float, 50.0),
        mode=mode,
    )

    fractions = (
        _get(parser, "split", "train_fraction", float, DEFAULT_FRACTIONS[0]),
        _get(parser, "split", "validation_fraction", float, DEFAULT_FRACTIONS[1]),
        _get(parser, "split", "test_fraction", float, DEFAULT_FRACTIONS[2]),
    )
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must sum to 1, got {fractions}")

    plant_probs = dict(DEFAULT_PLANT_PROBS)
    if parser.has_section("synth"):
        for norm, tid in _TECH_BY_NORM.items():
            p_mal, p_ben = plant_probs[tid]
            p_mal = _get(parser, "synth", f"plant_{norm}_malicious", float, p_mal)
            p_ben = _get(parser, "synth", f"plant_{norm}_benign", float, p_ben)
            plant_probs[tid] = (p_mal, p_ben)
    synth = SynthConfig(
        n_malicious=_get(parser, "synth", "n_malicious", int, 200),
        n_benign=_get(parser, "synth", "n_benign", int, 200),
        flows_per_sample=(
            _get(parser, "synth", "flows_min", int, 6),
            _get(parser, "synth", "flows_max", int, 14),
        ),
        plant_probs=plant_probs,
        separation=_get(parser, "synth", "separation", float, 0.8),
        seed=_get(parser, "synth", "seed", int, 20240),
        suppress_incidental=_get(parser, "synth", "suppress_incidental", _bool, True),
        dataset=_get(parser, "synth", "dataset", str, "synthetic"),
    )

    return RunConfig(
        flow_file=_path("flow_file", "flows.tsv"),
        label_manifest=_path("label_manifest", "labels.tsv"),
        model_dir=_path("model_dir", "models"),
        output_dir=_path("output_dir", "out"),
        rules=rules,
        policy=policy,
        split_fractions=fractions,
        split_seed=_get(parser, "split", "seed", int, 7),
        train_seeds=_get(parser, "train", "seeds", _int_list, DEFAULT_TRAIN_SEEDS),
        max_depth_grid=_get(parser, "train", "max_depth_grid", int, DEFAULT_MAX_DEPTH_GRID),
        min_leaf_grid=_get(parser, "train", "min_leaf_grid", _int_list, DEFAULT_MIN_LEAF_GRID),
        synth=synth,
    )
