"""
Synthetic noisy-arithmetic tasks with K output segments.

Each segment target is a noisy linear function of its own features. In the
dependent variant every target after the first also adds lambda times the
average of the realized earlier targets:

    y_1 = w_1 . x_1 + xi_1
    y_i = w_i . x_i + lambda * mean(y_1 .. y_{i-1}) + xi_i

Generation is fully determined by the task fingerprint and the data seed, so a
dataset can be rebuilt bit-exactly from its provenance.
"""

import csv
import logging
import os
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from .errors import ModeMismatchError, ValidationError
from .formats import canonical_line, format_float, keyvalue_block, parse_keyvalue_block

GENERATOR_VERSION = 1

logger = logging.getLogger(__name__)


class Mode(str, Enum):
    INDEPENDENT = "independent"
    DEPENDENT = "dependent"


@dataclass(frozen=True)
class TaskConfig:
    K: int
    p: int
    lam: float = 0.0
    sigma2: float = 1.0
    weight_seed: int = 0
    mode: Mode = Mode.INDEPENDENT

    @property
    def effective_lambda(self) -> float:
        """Lambda as recorded in outputs: always 0.0 for independent tasks."""
        return float(self.lam) if Mode(self.mode) is Mode.DEPENDENT else 0.0

    def validate(self) -> None:
        if not isinstance(self.K, (int, np.integer)) or self.K < 1:
            raise ValidationError(f"K: segment count must be >= 1, got {self.K!r}", field="K")
        if not isinstance(self.p, (int, np.integer)) or self.p < 1:
            raise ValidationError(f"p: feature dimension must be >= 1, got {self.p!r}", field="p")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValidationError(f"lambda: must be >= 0, got {self.lam!r}", field="lambda")
        if not np.isfinite(self.sigma2) or self.sigma2 < 0:
            raise ValidationError(f"sigma2: must be >= 0, got {self.sigma2!r}", field="sigma2")
        if not isinstance(self.weight_seed, (int, np.integer)) or self.weight_seed < 0:
            raise ValidationError(
                f"weight_seed: must be a non-negative integer, got {self.weight_seed!r}",
                field="weight_seed",
            )
        try:
            Mode(self.mode)
        except ValueError:
            raise ValidationError(f"mode: unknown task mode {self.mode!r}", field="mode")

    def fingerprint(self) -> str:
        return canonical_line(
            {
                "generator_version": GENERATOR_VERSION,
                "K": int(self.K),
                "p": int(self.p),
                "lambda": self.effective_lambda,
                "sigma2": float(self.sigma2),
                "weight_seed": int(self.weight_seed),
                "mode": Mode(self.mode).value,
            }
        )


def parse_fingerprint(fingerprint: str) -> TaskConfig:
    """Inverse of TaskConfig.fingerprint()."""
    fields = dict(item.split("=", 1) for item in fingerprint.split())
    version = int(fields.get("generator_version", -1))
    if version != GENERATOR_VERSION:
        raise ValidationError(
            f"generator_version: fingerprint was written by generator version {version}, "
            f"this is version {GENERATOR_VERSION}",
            field="generator_version",
        )
    config = TaskConfig(
        K=int(fields["K"]),
        p=int(fields["p"]),
        lam=float(fields["lambda"]),
        sigma2=float(fields["sigma2"]),
        weight_seed=int(fields["weight_seed"]),
        mode=Mode(fields["mode"]),
    )
    config.validate()
    return config


@dataclass(frozen=True, eq=False)
class SyntheticTask:
    config: TaskConfig
    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        if weights.shape != (self.config.K, self.config.p):
            raise ValidationError(
                f"weights: expected shape {(self.config.K, self.config.p)}, got {weights.shape}",
                field="weights",
            )
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @property
    def K(self) -> int:
        return self.config.K

    @property
    def p(self) -> int:
        return self.config.p

    @property
    def mode(self) -> Mode:
        return Mode(self.config.mode)

    def fingerprint(self) -> str:
        return self.config.fingerprint()


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    targets: np.ndarray


@dataclass(frozen=True, eq=False)
class Dataset:
    """n samples stored as arrays: features (n, K, p) and targets (n, K)."""

    features: np.ndarray
    targets: np.ndarray
    fingerprint: str
    data_seed: int

    def __post_init__(self):
        for name in ("features", "targets"):
            array = np.array(getattr(self, name), dtype=float)
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def K(self) -> int:
        return self.features.shape[1]

    @property
    def p(self) -> int:
        return self.features.shape[2]

    @property
    def provenance(self) -> Tuple[str, int]:
        return self.fingerprint, self.data_seed

    @property
    def config(self) -> TaskConfig:
        return parse_fingerprint(self.fingerprint)

    @property
    def lam(self) -> float:
        return self.config.effective_lambda

    @property
    def mode(self) -> Mode:
        return self.config.mode

    @property
    def samples(self) -> List[Sample]:
        return [Sample(self.features[i], self.targets[i]) for i in range(self.n)]

    def concatenated_features(self) -> np.ndarray:
        """Features flattened to (n, K * p), segment-major."""
        return self.features.reshape(self.n, self.K * self.p)

    def subset(self, index: slice) -> "Dataset":
        return Dataset(self.features[index], self.targets[index], self.fingerprint, self.data_seed)

    def with_targets(self, targets: np.ndarray) -> "Dataset":
        return Dataset(self.features, targets, self.fingerprint, self.data_seed)


def make_task(config: TaskConfig) -> SyntheticTask:
    """Draw the K weight vectors, standard normal, from config.weight_seed."""
    config.validate()
    rng = np.random.default_rng(config.weight_seed)
    weights = rng.standard_normal((config.K, config.p))
    logger.debug("made task %s", config.fingerprint())
    return SyntheticTask(config, weights)


def compute_targets(
    task: SyntheticTask,
    features: np.ndarray,
    noise: Optional[np.ndarray] = None,
    lam: Optional[float] = None,
) -> np.ndarray:
    """Apply the generator recurrence to features of shape (n, K, p).

    ``noise`` defaults to zero, giving the noiseless targets. ``lam`` defaults
    to the task's effective lambda.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim != 3 or features.shape[1:] != (task.K, task.p):
        raise ValidationError(
            f"features: expected shape (n, {task.K}, {task.p}), got {features.shape}",
            field="features",
        )
    if lam is None:
        lam = task.config.effective_lambda
    n = features.shape[0]
    targets = np.empty((n, task.K))
    running = np.zeros(n)
    for i in range(task.K):
        x_i = np.ascontiguousarray(features[:, i, :])
        y_i = (x_i @ task.weights[i][:, None])[:, 0]
        if i:
            y_i = y_i + lam * (running / i)
        if noise is not None:
            y_i = y_i + noise[:, i]
        targets[:, i] = y_i
        running = running + y_i
    return targets


def _generate(task: SyntheticTask, n: int, data_seed: int, lam: float) -> Dataset:
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ValidationError(f"n: sample count must be >= 0, got {n!r}", field="n")
    if not isinstance(data_seed, (int, np.integer)) or data_seed < 0:
        raise ValidationError(f"data_seed: must be a non-negative integer, got {data_seed!r}", field="data_seed")
    rng = np.random.default_rng(data_seed)
    features = rng.standard_normal((n, task.K, task.p))
    noise = rng.standard_normal((n, task.K)) * np.sqrt(task.config.sigma2)
    targets = compute_targets(task, features, noise, lam=lam)
    return Dataset(features, targets, task.fingerprint(), int(data_seed))


def generate_independent(task: SyntheticTask, n: int, data_seed: int) -> Dataset:
    """Sample n points whose segment targets are computed independently."""
    if task.mode is not Mode.INDEPENDENT:
        raise ModeMismatchError(
            f"mode: generate_independent needs an independent task, got {task.mode.value}",
            field="mode",
        )
    return _generate(task, n, data_seed, lam=0.0)


def generate_dependent(task: SyntheticTask, n: int, data_seed: int) -> Dataset:
    """Sample n points whose later targets lean on the average of earlier ones."""
    if task.mode is not Mode.DEPENDENT:
        raise ModeMismatchError(
            f"mode: generate_dependent needs a dependent task, got {task.mode.value}",
            field="mode",
        )
    return _generate(task, n, data_seed, lam=float(task.config.lam))


def generate(task: SyntheticTask, n: int, data_seed: int) -> Dataset:
    if task.mode is Mode.DEPENDENT:
        return generate_dependent(task, n, data_seed)
    return generate_independent(task, n, data_seed)


def regenerate(fingerprint: str, n: int, data_seed: int) -> Dataset:
    """Rebuild a dataset from its provenance."""
    return generate(make_task(parse_fingerprint(fingerprint)), n, data_seed)


def prefix_matrix(K: int) -> np.ndarray:
    """P with P[i, j] = 1/i for j < i: row i averages the first i segments."""
    P = np.zeros((K, K))
    for i in range(1, K):
        P[i, :i] = 1.0 / i
    return P


def target_covariance(task: SyntheticTask, include_signal: bool = True) -> np.ndarray:
    """Exact K x K covariance of the targets implied by the generator.

    With ``include_signal=False`` only the noise part is returned, which is the
    covariance of the targets given the features.
    """
    K = task.K
    M = np.linalg.inv(np.eye(K) - task.config.effective_lambda * prefix_matrix(K))
    source = np.eye(K) * task.config.sigma2
    if include_signal:
        source = source + np.diag(np.sum(task.weights ** 2, axis=1))
    return M @ source @ M.T


def noise_floor(task: SyntheticTask) -> np.ndarray:
    """Per-segment irreducible MSE of any predictor that sees all features."""
    return np.diag(target_covariance(task, include_signal=False)).copy()


# Rewards. All reward functions reduce over the last axis, so they accept a
# single K-vector or a batch of shape (..., K).


def _error_pair(predicted, target) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    predicted = np.asarray(predicted, dtype=float)
    target = np.asarray(target, dtype=float)
    if predicted.shape != target.shape:
        raise ValidationError(
            f"predicted/target: length mismatch {predicted.shape} vs {target.shape}",
            field="predicted",
        )
    if predicted.ndim == 0 or predicted.shape[-1] == 0:
        raise ValidationError("predicted/target: at least one segment is required", field="predicted")
    with np.errstate(over="ignore", invalid="ignore"):
        error = predicted - target
    return predicted, target, error


def unified_reward(predicted, target):
    """R = 1 / (1 + mean squared error over the segments)."""
    _p, _t, error = _error_pair(predicted, target)
    with np.errstate(over="ignore"):
        mse = np.mean(error * error, axis=-1)
    return 1.0 / (1.0 + mse)


def segment_rewards(predicted, target, lam: float = 0.0, prefix_targets=None) -> np.ndarray:
    """Per-segment rewards r_i, shape (..., K).

    For lam > 0 segment i > 1 is also penalized by
    ``lam * (e_i - lam * mean(prefix errors))**2`` where the prefix errors are
    measured against ``prefix_targets`` (the sample's own targets by default).
    """
    predicted, target, error = _error_pair(predicted, target)
    with np.errstate(over="ignore", invalid="ignore"):
        denominator = 1.0 + error * error
        if lam:
            reference = target if prefix_targets is None else np.asarray(prefix_targets, dtype=float)
            if reference.shape != predicted.shape:
                raise ValidationError(
                    f"prefix_targets: expected shape {predicted.shape}, got {reference.shape}",
                    field="prefix_targets",
                )
            prefix_error = predicted - reference
            K = error.shape[-1]
            cumulative = np.cumsum(prefix_error, axis=-1)
            penalty = np.zeros_like(error)
            for i in range(1, K):
                mean_prefix = cumulative[..., i - 1] / i
                penalty[..., i] = lam * (error[..., i] - lam * mean_prefix) ** 2
            denominator = denominator + penalty
        # infinite components can leave nan (inf - inf); the reward is then 0
        denominator = np.where(np.isnan(denominator), np.inf, denominator)
        return 1.0 / denominator


def decomposed_reward_independent(predicted, target):
    """Average of per-segment rewards 1 / (1 + e_i**2)."""
    return np.mean(segment_rewards(predicted, target), axis=-1)


def decomposed_reward_dependent(predicted, target, lam: float, prefix_targets=None):
    """Average of per-segment rewards that also score coherence with the prefix."""
    if not np.isfinite(lam) or lam < 0:
        raise ValidationError(f"lambda: must be >= 0, got {lam!r}", field="lambda")
    return np.mean(segment_rewards(predicted, target, lam, prefix_targets), axis=-1)


def decomposed_reward(predicted, target, mode: Mode, lam: float = 0.0):
    """The decomposed reward matching a task mode."""
    if Mode(mode) is Mode.DEPENDENT:
        return decomposed_reward_dependent(predicted, target, lam)
    return decomposed_reward_independent(predicted, target)


# CSV export / import


def _meta_path(path: str) -> str:
    return path + ".meta"


def dataset_header(p: int) -> List[str]:
    return ["sample", "segment"] + [f"feature_{j}" for j in range(p)] + ["target"]


def export_dataset(data: Dataset, path: str) -> None:
    """Write one row per (sample, segment) plus a .meta provenance sidecar."""
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(dataset_header(data.p))
        for s in range(data.n):
            for i in range(data.K):
                writer.writerow(
                    [s, i]
                    + [format_float(v) for v in data.features[s, i]]
                    + [format_float(data.targets[s, i])]
                )
    with open(_meta_path(path), "w") as fp:
        fp.write(
            keyvalue_block(
                [
                    ("fingerprint", data.fingerprint),
                    ("data_seed", data.data_seed),
                    ("n", data.n),
                    ("K", data.K),
                    ("p", data.p),
                ]
            )
        )
    logger.info("wrote %d samples to %s", data.n, path)


def import_dataset(path: str) -> Dataset:
    meta_path = _meta_path(path)
    if not os.path.exists(meta_path):
        raise ValidationError(f"dataset: missing provenance sidecar {meta_path}", field="dataset")
    with open(meta_path) as fp:
        meta = parse_keyvalue_block(fp.read())
    n, K, p = int(meta["n"]), int(meta["K"]), int(meta["p"])
    features = np.zeros((n, K, p))
    targets = np.zeros((n, K))
    with open(path, newline="") as fp:
        reader = csv.reader(fp)
        header = next(reader)
        if header != dataset_header(p):
            raise ValidationError(f"dataset: unexpected header {header}", field="dataset")
        for row in reader:
            s, i = int(row[0]), int(row[1])
            features[s, i] = [float(v) for v in row[2:2 + p]]
            targets[s, i] = float(row[2 + p])
    return Dataset(features, targets, meta["fingerprint"], int(meta["data_seed"]))
