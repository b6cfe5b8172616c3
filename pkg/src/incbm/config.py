"""Run configuration files: strict schema, no silently ignored keys."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .exceptions import ConfigError
from .trainer import CONFIG_FIELDS, TrainConfig

_INT_FIELDS = {"concepts_per_task", "epochs", "batch_size", "selector_epochs",
               "selector_batch_size", "seed"}
_FLOAT_FIELDS = {"lr", "lambda_sim", "sigma_sparse", "phi", "selector_lr",
                 "alpha_mahalanobis"}
_BOOL_FIELDS = {"augment", "sparse_frobenius_squared"}


@dataclass(frozen=True)
class RunConfig:
    """A parsed config file: dataset location, optional plan override, training knobs."""

    dataset: Path
    train: TrainConfig
    task_plan: list[list[int]] | None = None

    def with_seed(self, seed: int | None) -> "RunConfig":
        if seed is None:
            return self
        return replace(self, train=replace(self.train, seed=int(seed)))


def load_run_config(path: Path | str) -> RunConfig:
    """Parse and validate a JSON config file.

    Recognized keys are `dataset`, `task_plan`, and every TrainConfig field;
    anything else is rejected so typos fail loudly instead of silently
    training with defaults.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")

    allowed = {"dataset", "task_plan", *CONFIG_FIELDS}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "dataset" not in raw:
        raise ConfigError("config is missing required key 'dataset'")
    if not isinstance(raw["dataset"], str) or not raw["dataset"]:
        raise ConfigError("config key 'dataset' must be a non-empty string")

    kwargs = {}
    for key in CONFIG_FIELDS:
        if key not in raw:
            continue
        value = raw[key]
        if key in _BOOL_FIELDS:
            if not isinstance(value, bool):
                raise ConfigError(f"config key '{key}' must be a boolean")
        elif key in _INT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"config key '{key}' must be an integer")
        elif key in _FLOAT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"config key '{key}' must be a number")
            value = float(value)
        kwargs[key] = value

    plan = raw.get("task_plan")
    if plan is not None and not isinstance(plan, list):
        raise ConfigError("config key 'task_plan' must be a list of class lists")

    try:
        train = TrainConfig(**kwargs).validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    dataset = Path(raw["dataset"])
    if not dataset.is_absolute():
        dataset = path.parent / dataset
    return RunConfig(dataset=dataset, train=train, task_plan=plan)
