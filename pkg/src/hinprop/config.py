"""Run configuration: one JSON file, dotted --set overrides, strict keys.

The config aggregates every tunable of the pipeline (solver constants,
generator shape, experiment protocol, sweep values) so a single file plus
its overrides fully reproduces a run.  Unknown keys fail validation rather
than being ignored; "lambda" in the propagation section maps to the
PropagationConfig.lam field.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

from .datagen import GenConfig
from .errors import ConfigError
from .experiment import SWEEP_PARAMS, ExperimentSpec
from .metapath import DEFAULT_METAPATHS
from .propagate import PropagationConfig
from .weights import SvrConfig

DEFAULT_CONFIG = {
    "rng_seed": 0,
    "dataset": None,
    "metapaths": list(DEFAULT_METAPATHS),
    "svr": {"epsilon": 0.2, "C": 10.0, "max_iter": 1_000_000, "tol": 1e-5},
    "propagation": {"lambda": 2.0, "tol": 1e-6, "max_iter": 1000,
                    "solver": "auto", "closed_max_n": 5000},
    "gen": None,
    "experiment": {"fractions": [0.1, 0.2, 0.3, 0.4, 0.5], "repeats": 5,
                   "methods": ["tpathmine", "knn", "majority"],
                   "max_pairs": 10_000, "target_mode": "connections",
                   "knn_k": 5},
    "sweep": {"param": "lambda", "values": [1, 2, 4, 6, 8]},
}

_GEN_KEYS = {"n_users", "n_apps", "n_types", "n_classes", "types_per_app",
             "mean_apps_per_user", "affinity", "max_clicks_per_edge",
             "rng_seed"}


def load_config(path=None, overrides=()) -> dict:
    """Defaults, overlaid with the JSON file, then with --set overrides."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        _merge(cfg, user, context="")
    for item in overrides:
        _apply_set(cfg, item)
    return cfg


def _merge(base: dict, user: dict, context: str) -> None:
    for key, value in user.items():
        label = f"{context}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {label!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            _merge(base[key], value, context=label + ".")
        elif base[key] is None and isinstance(value, dict):
            base[key] = copy.deepcopy(value)
        else:
            base[key] = copy.deepcopy(value)


def _apply_set(cfg: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"--set needs key=value, got {item!r}")
    dotted, _, raw = item.partition("=")
    keys = dotted.strip().split(".")
    if not all(keys):
        raise ConfigError(f"--set has an empty key component in {item!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node, ref = cfg, DEFAULT_CONFIG
    for k in keys[:-1]:
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(f"unknown config key {dotted!r}")
        if node[k] is None:
            node[k] = {}
        node = node[k]
        ref = ref.get(k) if isinstance(ref, dict) else None
        if not isinstance(node, dict):
            raise ConfigError(f"config key {k!r} is not a section")
    leaf = keys[-1]
    # sections that default to null (gen) take any key; the typed
    # validation pass rejects unknown names later
    if isinstance(ref, dict) and leaf not in ref:
        raise ConfigError(f"unknown config key {dotted!r}")
    node[leaf] = value


@dataclass
class RunConfig:
    """Validated, typed view of the raw config dictionary."""

    raw: dict
    rng_seed: int
    metapaths: tuple
    dataset: str | None
    svr: SvrConfig
    prop: PropagationConfig
    gen: GenConfig | None
    spec: ExperimentSpec
    sweep_param: str
    sweep_values: list = field(default_factory=list)


def _build(cls, kwargs, what: str):
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {what} config: {exc}") from exc


def validate_config(cfg: dict) -> RunConfig:
    """Type-check the raw dictionary into dataclasses; ConfigError on failure."""
    svr = _build(SvrConfig, dict(cfg["svr"]), "svr")

    prop_raw = dict(cfg["propagation"])
    if "lambda" in prop_raw:
        prop_raw["lam"] = prop_raw.pop("lambda")
    prop = _build(PropagationConfig, prop_raw, "propagation")

    gen = None
    if cfg.get("gen") is not None:
        gen_raw = dict(cfg["gen"])
        unknown = set(gen_raw) - _GEN_KEYS
        if unknown:
            raise ConfigError(f"unknown gen config keys {sorted(unknown)}")
        missing = {"n_users", "n_apps"} - set(gen_raw)
        if missing:
            raise ConfigError(f"gen config needs {sorted(missing)}")
        if "types_per_app" in gen_raw:
            gen_raw["types_per_app"] = tuple(gen_raw["types_per_app"])
        gen = _build(GenConfig, gen_raw, "gen")

    exp = dict(cfg["experiment"])
    spec = _build(ExperimentSpec, {
        "fractions": tuple(exp.get("fractions", ())),
        "repeats": exp.get("repeats", 5),
        "methods": tuple(exp.get("methods", ())),
        "metapaths": tuple(cfg["metapaths"]),
        "svr": svr,
        "prop": prop,
        "max_pairs": exp.get("max_pairs", 10_000),
        "target_mode": exp.get("target_mode", "connections"),
        "knn_k": exp.get("knn_k", 5),
        "rng_seed": cfg["rng_seed"],
        "gen": gen,
        "dataset_dir": cfg.get("dataset"),
    }, "experiment")

    sweep = cfg.get("sweep") or {}
    sweep_param = sweep.get("param", "lambda")
    if sweep_param not in SWEEP_PARAMS:
        raise ConfigError(f"sweep param must be one of {SWEEP_PARAMS}")
    sweep_values = list(sweep.get("values", []))

    return RunConfig(raw=cfg, rng_seed=int(cfg["rng_seed"]),
                     metapaths=tuple(cfg["metapaths"]),
                     dataset=cfg.get("dataset"), svr=svr, prop=prop, gen=gen,
                     spec=spec, sweep_param=sweep_param,
                     sweep_values=sweep_values)


def require_dir(path, what: str) -> Path:
    """Resolve a directory that must exist before any work starts."""
    p = Path(path)
    if not p.is_dir():
        raise ConfigError(f"{what} directory {path!r} does not exist")
    return p


def require_file(path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{what} file {path!r} does not exist")
    return p
