"""
Sweep configuration: a frozen dataclass, JSON config files and environment defaults.

Values come from (lowest to highest priority) the dataclass defaults, a JSON
file whose keys are the SweepConfig field names, and command-line overrides.
"""

import dataclasses
import json
import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Tuple

from .errors import ValidationError
from .learners import TrainConfig
from .tasks import Mode

logger = logging.getLogger(__name__)

WORKERS_ENV = "MARL_BENCH_WORKERS"


def default_workers() -> Optional[int]:
    """Worker count from MARL_BENCH_WORKERS, or None (run cells in-line)."""
    value = os.environ.get(WORKERS_ENV)
    if not value:
        return None
    try:
        workers = int(value)
    except ValueError:
        raise ValidationError(f"{WORKERS_ENV}: expected an integer, got {value!r}", field=WORKERS_ENV)
    if workers < 1:
        raise ValidationError(f"{WORKERS_ENV}: must be >= 1, got {workers}", field=WORKERS_ENV)
    return workers


@dataclass(frozen=True)
class SweepConfig:
    mode: Mode = Mode.INDEPENDENT
    K_list: Tuple[int, ...] = (4,)
    lambda_list: Tuple[float, ...] = (0.0,)
    p: int = 8
    sigma2: float = 1.0
    n_grid: Tuple[int, ...] = (32, 64, 128, 256, 512, 1024)
    trials: int = 5
    threshold_mse: float = 1.2
    base_seed: int = 0
    output_dir: str = "."
    test_set_size: int = 2000
    total_feature_dim: Optional[int] = None
    workers: Optional[int] = None
    learning_rate_grid: Tuple[float, ...] = TrainConfig.learning_rate_grid
    max_epochs: int = TrainConfig.max_epochs
    convergence_tol: float = TrainConfig.convergence_tol
    validation_fraction: float = TrainConfig.validation_fraction

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        for name in ("K_list", "lambda_list", "n_grid", "learning_rate_grid"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def lambdas(self) -> Tuple[float, ...]:
        """Lambda values actually swept; independent sweeps collapse to 0.0."""
        if self.mode is Mode.INDEPENDENT:
            return (0.0,)
        return tuple(sorted(set(float(lam) for lam in self.lambda_list)))

    def feature_dim(self, K: int) -> int:
        if self.total_feature_dim is None:
            return self.p
        return self.total_feature_dim // K

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            learning_rate_grid=self.learning_rate_grid,
            max_epochs=self.max_epochs,
            convergence_tol=self.convergence_tol,
            validation_fraction=self.validation_fraction,
            seed=seed,
        )

    def validate(self) -> None:
        if not self.K_list:
            raise ValidationError("K_list: must not be empty", field="K_list")
        if any(K < 1 for K in self.K_list):
            raise ValidationError("K_list: every K must be >= 1", field="K_list")
        if not self.lambda_list:
            raise ValidationError("lambda_list: must not be empty", field="lambda_list")
        if any(lam < 0 for lam in self.lambda_list):
            raise ValidationError("lambda_list: every lambda must be >= 0", field="lambda_list")
        if not self.n_grid:
            raise ValidationError("n_grid: must not be empty", field="n_grid")
        if self.n_grid[0] < 1 or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValidationError("n_grid: must be strictly increasing counts >= 1", field="n_grid")
        if self.trials < 1:
            raise ValidationError("trials: must be >= 1", field="trials")
        if self.p < 1:
            raise ValidationError("p: must be >= 1", field="p")
        if self.sigma2 < 0:
            raise ValidationError("sigma2: must be >= 0", field="sigma2")
        if self.test_set_size < 1:
            raise ValidationError("test_set_size: must be >= 1", field="test_set_size")
        if self.base_seed < 0:
            raise ValidationError("base_seed: must be >= 0", field="base_seed")
        if self.workers is not None and self.workers < 1:
            raise ValidationError("workers: must be >= 1", field="workers")
        if self.total_feature_dim is not None:
            for K in self.K_list:
                if self.total_feature_dim // K < 1:
                    raise ValidationError(
                        f"total_feature_dim: {self.total_feature_dim} leaves no feature for K={K}",
                        field="total_feature_dim",
                    )
        self.train_config(0).validate()


FIELD_NAMES = tuple(f.name for f in dataclasses.fields(SweepConfig))


def load_config_file(path: str) -> Dict[str, Any]:
    """Read a JSON object of SweepConfig fields; unknown keys are rejected."""
    try:
        with open(path) as fp:
            data = json.load(fp)
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"config: cannot read {path}: {e}", field="config")
    if not isinstance(data, dict):
        raise ValidationError(f"config: {path} must hold a JSON object", field="config")
    unknown = sorted(set(data) - set(FIELD_NAMES))
    if unknown:
        raise ValidationError(f"config: unknown key(s) {', '.join(unknown)} in {path}", field="config")
    return data


def build_sweep_config(
    path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None
) -> SweepConfig:
    """Merge defaults, an optional JSON file and non-None overrides."""
    values: Dict[str, Any] = {}
    if path:
        values.update(load_config_file(path))
        logger.info(f"loaded sweep config from {path}")
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    if values.get("workers") is None:
        values["workers"] = default_workers()
    try:
        config = SweepConfig(**values)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"config: {e}", field="config")
    config.validate()
    return config
