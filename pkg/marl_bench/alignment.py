"""
Estimates of the alignment factor alpha = sup |R - Rbar|.

R is the unified reward and Rbar the decomposed reward matching the task mode.
Both estimators return lower estimates of the supremum: a quantile of the
discrepancy over sampled rollouts, or the best point found by finite-difference
hill climbing from sampled starting points.
"""

import csv
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import AscentError, ValidationError
from .formats import format_float
from .learners import SegmentedModel
from .tasks import SyntheticTask, compute_targets, decomposed_reward, generate, unified_reward

logger = logging.getLogger(__name__)


class Method(str, Enum):
    MONTE_CARLO_MAX = "MonteCarloMax"
    MONTE_CARLO_QUANTILE = "MonteCarloQuantile"
    GRADIENT_ASCENT = "GradientAscent"


@dataclass(frozen=True, eq=False)
class Witness:
    """The point realizing a reported discrepancy.

    Features, targets and predictions are absent for estimates computed from a
    bare list of reward pairs.
    """

    R: float
    Rbar: float
    features: Optional[np.ndarray] = None
    targets: Optional[np.ndarray] = None
    predictions: Optional[np.ndarray] = None

    @property
    def discrepancy(self) -> float:
        return abs(self.R - self.Rbar)


@dataclass(frozen=True, eq=False)
class AlphaEstimate:
    alpha_hat: float
    method: Method
    quantile: float
    n_evaluations: int
    witness: Witness

    def items(self):
        rows = [
            ("alpha_hat", self.alpha_hat),
            ("method", self.method.value),
            ("quantile", self.quantile),
            ("n_evaluations", self.n_evaluations),
            ("witness_R", self.witness.R),
            ("witness_Rbar", self.witness.Rbar),
        ]
        for name in ("features", "targets", "predictions"):
            value = getattr(self.witness, name)
            if value is not None:
                rows.append((f"witness_{name}", [float(v) for v in np.ravel(value)]))
        return rows


@dataclass(frozen=True)
class AscentConfig:
    restarts: int = 16
    steps: int = 200
    step_size: float = 0.05
    h: float = 1e-4
    seed: int = 0

    def validate(self) -> None:
        for name in ("restarts", "steps"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name}: must be >= 1", field=name)
        for name in ("step_size", "h"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name}: must be > 0", field=name)
        if self.seed < 0:
            raise ValidationError("seed: must be >= 0", field="seed")


def nearest_rank_index(n: int, quantile: float) -> int:
    """0-based position of the ceil(q * n)-th order statistic."""
    # round first so that e.g. 0.7 * 10 is not taken as 7.000000000000001
    return max(1, math.ceil(round(quantile * n, 9))) - 1


def alpha_monte_carlo(
    reward_pairs: Sequence[Tuple[float, float]],
    quantile: float = 1.0,
    samples: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None,
) -> AlphaEstimate:
    """Nearest-rank quantile of |R - Rbar| over the pairs (1.0 gives the maximum).

    ``samples`` optionally carries the (features, targets, predictions) arrays
    the pairs were computed from, so the witness records the full point.
    """
    if len(reward_pairs) == 0:
        raise ValidationError("reward_pairs: at least one pair is required", field="reward_pairs")
    if not 0.0 < quantile <= 1.0:
        raise ValidationError(f"quantile: must lie in (0, 1], got {quantile!r}", field="quantile")
    pairs = np.asarray(reward_pairs, dtype=float).reshape(-1, 2)
    gaps = np.abs(pairs[:, 0] - pairs[:, 1])
    order = np.argsort(gaps, kind="stable")
    index = int(order[nearest_rank_index(len(gaps), quantile)])
    R, Rbar = float(pairs[index, 0]), float(pairs[index, 1])
    if samples is not None:
        features, targets, predictions = samples
        witness = Witness(R, Rbar, features[index].copy(), targets[index].copy(), predictions[index].copy())
    else:
        witness = Witness(R, Rbar)
    method = Method.MONTE_CARLO_MAX if quantile == 1.0 else Method.MONTE_CARLO_QUANTILE
    return AlphaEstimate(
        alpha_hat=witness.discrepancy,
        method=method,
        quantile=float(quantile),
        n_evaluations=len(gaps),
        witness=witness,
    )


def reward_pairs(task: SyntheticTask, predictions: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """(R, Rbar) per sample, Rbar being the decomposed reward of the task's mode."""
    R = unified_reward(predictions, targets)
    Rbar = decomposed_reward(predictions, targets, task.mode, task.config.effective_lambda)
    return np.stack([R, Rbar], axis=-1)


def alpha_from_model(
    task: SyntheticTask,
    model: SegmentedModel,
    n_rollouts: int,
    quantile: float = 1.0,
    data_seed: int = 0,
) -> AlphaEstimate:
    """Sample fresh rollouts from the task and estimate alpha from the model's predictions."""
    if n_rollouts < 1:
        raise ValidationError("n_rollouts: must be >= 1", field="n_rollouts")
    data = generate(task, n_rollouts, data_seed)
    predictions = model.predict(data.features)
    pairs = reward_pairs(task, predictions, data.targets)
    return alpha_monte_carlo(pairs, quantile, samples=(data.features, data.targets, predictions))


def read_reward_pairs(path: str) -> List[Tuple[float, float]]:
    """Read an `R,Rbar` CSV file."""
    with open(path, newline="") as fp:
        reader = csv.DictReader(fp)
        if reader.fieldnames != ["R", "Rbar"]:
            raise ValidationError(
                f"pairs: expected header R,Rbar in {path}, got {reader.fieldnames}",
                field="pairs",
            )
        return [(float(row["R"]), float(row["Rbar"])) for row in reader]


def write_reward_pairs(pairs: Sequence[Tuple[float, float]], path: str) -> None:
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["R", "Rbar"])
        for R, Rbar in pairs:
            writer.writerow([format_float(R), format_float(Rbar)])


class _Discrepancy:
    """|R - Rbar| at feature points, targets tied to the noiseless recurrence."""

    def __init__(self, task: SyntheticTask, model: SegmentedModel):
        self.task = task
        self.model = model
        self.evaluations = 0

    def evaluate(self, features: np.ndarray):
        targets = compute_targets(self.task, features)
        predictions = self.model.predict(features)
        pairs = reward_pairs(self.task, predictions, targets)
        self.evaluations += len(features)
        return np.abs(pairs[:, 0] - pairs[:, 1]), pairs, targets, predictions


def _ascend(objective: _Discrepancy, start: np.ndarray, value: float, cfg: AscentConfig, restart: int):
    """Hill-climb from one start along the normalized finite-difference gradient."""
    shape = start.shape
    dim = start.size
    x = start.ravel().copy()
    basis = np.eye(dim) * cfg.h
    for _ in range(cfg.steps):
        probes = np.concatenate([x + basis, x - basis]).reshape((2 * dim,) + shape)
        values = objective.evaluate(probes)[0]
        if not np.all(np.isfinite(values)):
            raise AscentError(restart, float(values[~np.isfinite(values)][0]))
        gradient = (values[:dim] - values[dim:]) / (2.0 * cfg.h)
        norm = float(np.linalg.norm(gradient))
        if norm == 0.0:
            break
        candidate = x + cfg.step_size * gradient / norm
        candidate_value = float(objective.evaluate(candidate.reshape((1,) + shape))[0][0])
        if not math.isfinite(candidate_value):
            raise AscentError(restart, candidate_value)
        if candidate_value <= value:
            break
        x, value = candidate, candidate_value
    return x.reshape(shape), value


def alpha_gradient_ascent(task: SyntheticTask, model: SegmentedModel, cfg: AscentConfig) -> AlphaEstimate:
    """Best discrepancy found by hill climbing over the features.

    Restarts begin at the features the task generator draws for
    ``(n=cfg.restarts, data_seed=cfg.seed)``; only improving steps are taken, so
    the result is never below the best starting point.
    """
    cfg.validate()
    objective = _Discrepancy(task, model)
    starts = generate(task, cfg.restarts, cfg.seed).features
    start_values, start_pairs, start_targets, start_predictions = objective.evaluate(starts)
    for restart, value in enumerate(start_values):
        if not math.isfinite(value):
            raise AscentError(restart, float(value))

    best = None
    for restart in range(cfg.restarts):
        point, value = _ascend(objective, starts[restart], float(start_values[restart]), cfg, restart)
        if value > start_values[restart]:
            _d, pairs, targets, predictions = objective.evaluate(point[None])
            witness = Witness(float(pairs[0, 0]), float(pairs[0, 1]), point, targets[0], predictions[0])
        else:
            witness = Witness(
                float(start_pairs[restart, 0]),
                float(start_pairs[restart, 1]),
                starts[restart].copy(),
                start_targets[restart],
                start_predictions[restart],
            )
        logger.debug(f"restart {restart}: start {start_values[restart]:.6f}, best {witness.discrepancy:.6f}")
        if best is None or witness.discrepancy > best.discrepancy:
            best = witness

    logger.info(f"gradient ascent: alpha_hat={best.discrepancy:.6f} after {objective.evaluations} evaluations")
    return AlphaEstimate(
        alpha_hat=best.discrepancy,
        method=Method.GRADIENT_ASCENT,
        quantile=1.0,
        n_evaluations=objective.evaluations,
        witness=best,
    )
