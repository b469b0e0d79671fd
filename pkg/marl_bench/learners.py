"""
Empirical reward maximization for the unified (SARL) and per-agent (MARL) models.

Both learners minimize mean squared error by full-batch gradient descent,
which has the same optimizer as the bounded reward 1 / (1 + squared error).
The learning rate is picked from a grid on a validation split carved from the
end of the training set, then the model is refit on the full training set.

MARL agents are trained one after another. In dependent mode agent i also
sees the mean of the *predicted* outputs of agents 1..i-1, during training and
at evaluation, so upstream errors propagate downstream.
"""

import csv
import dataclasses
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ModeMismatchError, TrainingDivergedError, ValidationError
from .formats import format_float, keyvalue_block, parse_keyvalue_block
from .seeding import derive_seed, make_rng
from .tasks import (
    Dataset,
    Mode,
    SyntheticTask,
    decomposed_reward,
    generate,
    segment_rewards,
    unified_reward,
)

logger = logging.getLogger(__name__)

INIT_SCALE = 0.01


class Arrangement(str, Enum):
    UNIFIED = "unified"
    PER_AGENT = "per_agent"


class Learner(str, Enum):
    SARL = "SARL"
    MARL = "MARL"


@dataclass(eq=False)
class SegmentedModel:
    """An affine predictor of the K segment targets.

    Unified models hold ``unified_weights`` of shape (K, K*p). Per-agent models
    hold ``agent_weights`` of shape (K, p) and, in dependent mode, a context
    coefficient per agent (entry 0 is fixed at zero and not trainable).
    """

    arrangement: Arrangement
    mode: Mode
    K: int
    p: int
    biases: np.ndarray
    unified_weights: Optional[np.ndarray] = None
    agent_weights: Optional[np.ndarray] = None
    context: Optional[np.ndarray] = None

    @property
    def parameter_count(self) -> int:
        if self.arrangement is Arrangement.UNIFIED:
            return self.K * self.K * self.p + self.K
        count = self.K * self.p + self.K
        if self.mode is Mode.DEPENDENT:
            count += self.K - 1
        return count

    def is_finite(self) -> bool:
        arrays = [self.biases, self.unified_weights, self.agent_weights, self.context]
        return all(np.all(np.isfinite(a)) for a in arrays if a is not None)

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Predict targets of shape (n, K) from features of shape (n, K, p)."""
        features = np.asarray(features, dtype=float)
        if features.ndim != 3 or features.shape[1:] != (self.K, self.p):
            raise ValidationError(
                f"features: expected shape (n, {self.K}, {self.p}), got {features.shape}",
                field="features",
            )
        n = features.shape[0]
        if self.arrangement is Arrangement.UNIFIED:
            flat = np.ascontiguousarray(features.reshape(n, self.K * self.p))
            return flat @ self.unified_weights.T + self.biases
        predictions = np.empty((n, self.K))
        running = np.zeros(n)
        for i in range(self.K):
            x_i = np.ascontiguousarray(features[:, i, :])
            out = (x_i @ self.agent_weights[i][:, None])[:, 0] + self.biases[i]
            if self.mode is Mode.DEPENDENT and i > 0:
                out = out + self.context[i] * (running / i)
            predictions[:, i] = out
            running = running + out
        return predictions


@dataclass(frozen=True)
class TrainConfig:
    learning_rate_grid: Tuple[float, ...] = (1e-3, 1e-2, 1e-1)
    max_epochs: int = 500
    convergence_tol: float = 1e-8
    validation_fraction: float = 0.2
    seed: int = 0

    def validate(self) -> None:
        if not self.learning_rate_grid:
            raise ValidationError("learning_rate_grid: must not be empty", field="learning_rate_grid")
        for lr in self.learning_rate_grid:
            if not (math.isfinite(lr) and lr > 0):
                raise ValidationError(
                    f"learning_rate_grid: rates must be positive, got {lr!r}",
                    field="learning_rate_grid",
                )
        if self.max_epochs < 1:
            raise ValidationError("max_epochs: must be >= 1", field="max_epochs")
        if not self.convergence_tol >= 0:
            raise ValidationError("convergence_tol: must be >= 0", field="convergence_tol")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValidationError(
                "validation_fraction: must lie in (0, 1)", field="validation_fraction"
            )
        if self.seed < 0:
            raise ValidationError("seed: must be >= 0", field="seed")


@dataclass(frozen=True)
class StageFit:
    """Outcome of fitting one stage (the whole unified model, or one agent)."""

    stage: int
    learning_rate: float
    epochs_run: int
    objective_trace: Tuple[float, ...]
    reward_trace: Tuple[float, ...]
    validation_objective: float
    diverged_rates: Tuple[float, ...] = ()

    @property
    def final_objective(self) -> float:
        return self.objective_trace[-1]


@dataclass(frozen=True)
class FitReport:
    learner: Learner
    stages: Tuple[StageFit, ...]
    final_train_objective: float
    final_train_reward: float

    @property
    def chosen_learning_rate(self) -> float:
        """Rate of the first stage; per-stage rates are in ``stages``."""
        return self.stages[0].learning_rate

    @property
    def epochs_run(self) -> int:
        return sum(stage.epochs_run for stage in self.stages)

    @property
    def objective_trace(self) -> Tuple[float, ...]:
        """Stage traces concatenated in training order."""
        return tuple(value for stage in self.stages for value in stage.objective_trace)

    @property
    def validation_objective(self) -> float:
        values = [s.validation_objective for s in self.stages if math.isfinite(s.validation_objective)]
        return float(np.mean(values)) if values else math.nan

    def items(self):
        rows = [("learner", self.learner.value), ("stages", len(self.stages))]
        for stage in self.stages:
            prefix = f"stage_{stage.stage}"
            rows.extend(
                [
                    (f"{prefix}_learning_rate", stage.learning_rate),
                    (f"{prefix}_epochs_run", stage.epochs_run),
                    (f"{prefix}_train_objective", stage.final_objective),
                    (f"{prefix}_validation_objective", stage.validation_objective),
                ]
            )
        rows.append(("final_train_objective", self.final_train_objective))
        rows.append(("final_train_reward", self.final_train_reward))
        return rows


@dataclass(frozen=True)
class EvalResult:
    per_segment_mse: Tuple[float, ...]
    overall_mse: float
    mean_reward: float

    def items(self):
        return [
            ("per_segment_mse", list(self.per_segment_mse)),
            ("overall_mse", self.overall_mse),
            ("mean_reward", self.mean_reward),
        ]


class _Diverged(Exception):
    pass


RewardFn = Callable[[np.ndarray, np.ndarray], float]


def _mean_reward_of(reward: Callable) -> RewardFn:
    def mean_reward(predicted: np.ndarray, target: np.ndarray) -> float:
        return float(np.mean(reward(predicted, target))) if len(target) else math.nan

    return mean_reward


def _segment_reward(predicted, target):
    return segment_rewards(predicted, target)[..., 0]


def _objective(X, W, b, Y) -> Tuple[float, np.ndarray]:
    residual = X @ W + b - Y
    return float(np.mean(residual * residual)), residual


def _descend(X, Y, lr, cfg: TrainConfig, W0, b0, reward: RewardFn):
    """Full-batch gradient descent from (W0, b0); raises _Diverged on a bad step."""
    n = X.shape[0]
    W, b = W0.copy(), b0.copy()
    with np.errstate(all="ignore"):
        objective, residual = _objective(X, W, b, Y)
        trace = [objective]
        rewards = [reward(residual + Y, Y)]
        epochs = 0
        for _ in range(cfg.max_epochs):
            grad_W = (2.0 / n) * (X.T @ residual)
            grad_b = (2.0 / n) * residual.sum(axis=0)
            W_next = W - lr * grad_W
            b_next = b - lr * grad_b
            next_objective, next_residual = _objective(X, W_next, b_next, Y)
            if not math.isfinite(next_objective) or next_objective > objective + cfg.convergence_tol:
                raise _Diverged(lr)
            epochs += 1
            decrease = objective - next_objective
            W, b, objective, residual = W_next, b_next, next_objective, next_residual
            trace.append(objective)
            rewards.append(reward(residual + Y, Y))
            if decrease < cfg.convergence_tol:
                break
    return W, b, trace, rewards, epochs


def _fit_stage(X, Y, cfg: TrainConfig, stage: int, reward: RewardFn):
    """Select a learning rate on the validation split, then refit on all of (X, Y)."""
    n, q = X.shape
    m = Y.shape[1]
    rng = make_rng(cfg.seed, stage)
    W0 = rng.normal(0.0, INIT_SCALE, size=(q, m))
    b0 = np.zeros(m)

    n_val = int(math.floor(n * cfg.validation_fraction))
    use_split = 0 < n_val < n
    if use_split:
        X_fit, Y_fit = X[: n - n_val], Y[: n - n_val]
        X_val, Y_val = X[n - n_val:], Y[n - n_val:]
    else:
        X_fit, Y_fit = X, Y

    scores = []
    diverged = []
    for lr in cfg.learning_rate_grid:
        try:
            W, b, trace, _rewards, _epochs = _descend(X_fit, Y_fit, lr, cfg, W0, b0, reward)
        except _Diverged:
            logger.warning(f"stage {stage}: learning rate {lr} diverged, dropping it")
            diverged.append(lr)
            continue
        score = _objective(X_val, W, b, Y_val)[0] if use_split else trace[-1]
        if not math.isfinite(score):
            logger.warning(f"stage {stage}: learning rate {lr} gave a non-finite score, dropping it")
            diverged.append(lr)
            continue
        scores.append((score, lr))

    if not scores:
        raise TrainingDivergedError(cfg.learning_rate_grid, stage=stage)
    validation_objective, chosen = min(scores, key=lambda item: item[0])
    if not use_split:
        validation_objective = math.nan

    try:
        W, b, trace, rewards, epochs = _descend(X, Y, chosen, cfg, W0, b0, reward)
    except _Diverged:
        raise TrainingDivergedError([chosen], stage=stage)
    logger.info(f"stage {stage}: chose learning rate {chosen} after {epochs} epochs")
    fit = StageFit(
        stage=stage,
        learning_rate=chosen,
        epochs_run=epochs,
        objective_trace=tuple(trace),
        reward_trace=tuple(rewards),
        validation_objective=validation_objective,
        diverged_rates=tuple(diverged),
    )
    return W, b, fit


def _require_samples(data: Dataset) -> None:
    if data.n < 1:
        raise ValidationError("data: at least one sample is required", field="data")


def _summary(model: SegmentedModel, data: Dataset) -> Tuple[float, float]:
    result = evaluate(model, data)
    return result.overall_mse, result.mean_reward


def train_sarl(data: Dataset, cfg: TrainConfig) -> Tuple[SegmentedModel, FitReport]:
    """Fit one affine map from the concatenated features to all K targets."""
    cfg.validate()
    _require_samples(data)
    X = np.ascontiguousarray(data.concatenated_features())
    Y = np.ascontiguousarray(data.targets)
    W, b, fit = _fit_stage(X, Y, cfg, stage=0, reward=_mean_reward_of(unified_reward))
    model = SegmentedModel(
        arrangement=Arrangement.UNIFIED,
        mode=data.mode,
        K=data.K,
        p=data.p,
        biases=b,
        unified_weights=np.ascontiguousarray(W.T),
    )
    objective, reward = _summary(model, data)
    return model, FitReport(Learner.SARL, (fit,), objective, reward)


def train_marl_sequential(
    data: Dataset, cfg: TrainConfig, mode: Optional[Mode] = None
) -> Tuple[SegmentedModel, FitReport]:
    """Train agents 1..K in order, each on its own segment.

    ``mode`` is the decomposition the agents assume and defaults to the data's
    mode; independent agents may be imposed on dependent data.
    """
    cfg.validate()
    _require_samples(data)
    mode = Mode(mode) if mode is not None else data.mode
    K, p, n = data.K, data.p, data.n
    agent_weights = np.zeros((K, p))
    biases = np.zeros(K)
    context = np.zeros(K) if mode is Mode.DEPENDENT else None
    stages: List[StageFit] = []
    running = np.zeros(n)
    segment_reward = _mean_reward_of(_segment_reward)
    for i in range(K):
        X = np.ascontiguousarray(data.features[:, i, :])
        if mode is Mode.DEPENDENT and i > 0:
            X = np.column_stack([X, running / i])
        Y = np.ascontiguousarray(data.targets[:, i:i + 1])
        W, b, fit = _fit_stage(X, Y, cfg, stage=i, reward=segment_reward)
        agent_weights[i] = W[:p, 0]
        biases[i] = b[0]
        if mode is Mode.DEPENDENT and i > 0:
            context[i] = W[p, 0]
        stages.append(fit)
        running = running + (X @ W + b)[:, 0]
    model = SegmentedModel(
        arrangement=Arrangement.PER_AGENT,
        mode=mode,
        K=K,
        p=p,
        biases=biases,
        agent_weights=agent_weights,
        context=context,
    )
    objective, reward = _summary(model, data)
    return model, FitReport(Learner.MARL, tuple(stages), objective, reward)


def evaluate(model: SegmentedModel, data: Dataset, mode: Optional[Mode] = None) -> EvalResult:
    """Held-out MSE per segment and the mean reward matching the model.

    Unified models are scored with the unified reward. Per-agent models are
    scored with the decomposed reward of their mode and predict from their own
    upstream predictions only.
    """
    _require_samples(data)
    mode = Mode(mode) if mode is not None else model.mode
    if mode is not model.mode:
        raise ModeMismatchError(
            f"mode: model was built for {model.mode.value} tasks, asked to evaluate as {mode.value}",
            field="mode",
        )
    if (data.K, data.p) != (model.K, model.p):
        raise ValidationError(
            f"data: shape (K={data.K}, p={data.p}) does not match model (K={model.K}, p={model.p})",
            field="data",
        )
    predictions = model.predict(data.features)
    with np.errstate(over="ignore", invalid="ignore"):
        error = predictions - data.targets
        per_segment = np.mean(error * error, axis=0)
    if model.arrangement is Arrangement.UNIFIED:
        rewards = unified_reward(predictions, data.targets)
    else:
        lam = data.lam if mode is Mode.DEPENDENT else 0.0
        rewards = decomposed_reward(predictions, data.targets, mode, lam)
    return EvalResult(
        per_segment_mse=tuple(float(v) for v in per_segment),
        overall_mse=float(np.mean(per_segment)),
        mean_reward=float(np.mean(rewards)),
    )


def oracle_model(task: SyntheticTask) -> SegmentedModel:
    """The per-agent model holding the generator's own coefficients."""
    context = None
    if task.mode is Mode.DEPENDENT:
        context = np.full(task.K, float(task.config.lam))
        context[0] = 0.0
    return SegmentedModel(
        arrangement=Arrangement.PER_AGENT,
        mode=task.mode,
        K=task.K,
        p=task.p,
        biases=np.zeros(task.K),
        agent_weights=np.array(task.weights),
        context=context,
    )


def train(learner: Learner, data: Dataset, cfg: TrainConfig, mode: Optional[Mode] = None):
    if Learner(learner) is Learner.SARL:
        return train_sarl(data, cfg)
    return train_marl_sequential(data, cfg, mode)


def run_trial(
    task: SyntheticTask,
    learner: Learner,
    n: int,
    data_seed: int,
    cfg: TrainConfig,
    test_set_size: int = 2000,
    mode: Optional[Mode] = None,
) -> EvalResult:
    """Train on n fresh samples and score on a fresh test set of fixed size.

    The test set seed is derived from ``data_seed``, so paired learners that
    share a data seed are scored on the same test points.
    """
    train_data = generate(task, n, data_seed)
    test_data = generate(task, test_set_size, derive_seed(data_seed, "test"))
    model, _report = train(learner, train_data, cfg, mode)
    return evaluate(model, test_data)


def first_meeting(curve: Sequence[Tuple[int, float, float]], threshold_mse: float) -> Optional[int]:
    """First grid point whose mean MSE is at or below the threshold."""
    for n, mean_mse, _std in curve:
        if mean_mse <= threshold_mse:
            return n
    return None


def trial_seeds(base_seed: int, K: int, lam: float, learner: Learner, n: int, trial: int) -> Tuple[int, int]:
    """(data_seed, train_seed) for one trial of a learning curve.

    The data seed leaves out the learner, so SARL and MARL trials at the same
    point see the same training and test sets.
    """
    data_seed = derive_seed(base_seed, "data", K, lam, n, trial)
    train_seed = derive_seed(base_seed, "train", K, lam, Learner(learner).value, n, trial)
    return data_seed, train_seed


def samples_to_threshold(
    task: SyntheticTask,
    learner: Learner,
    mode: Optional[Mode],
    threshold_mse: float,
    n_grid: Sequence[int],
    trials: int,
    base_seed: int,
    test_set_size: int = 2000,
    train_config: Optional[TrainConfig] = None,
) -> Tuple[Optional[int], List[Tuple[int, float, float]]]:
    """Smallest n on the grid whose trial-averaged test MSE meets the threshold."""
    n_grid = list(n_grid)
    if not n_grid or any(b <= a for a, b in zip(n_grid, n_grid[1:])) or n_grid[0] < 1:
        raise ValidationError("n_grid: must be a non-empty strictly increasing list of counts >= 1", field="n_grid")
    if trials < 1:
        raise ValidationError("trials: must be >= 1", field="trials")
    train_config = train_config or TrainConfig()
    learner = Learner(learner)
    lam = task.config.effective_lambda
    curve = []
    for n in n_grid:
        mses = []
        for trial in range(trials):
            data_seed, train_seed = trial_seeds(base_seed, task.K, lam, learner, n, trial)
            cfg = dataclasses.replace(train_config, seed=train_seed)
            result = run_trial(task, learner, n, data_seed, cfg, test_set_size, mode)
            mses.append(result.overall_mse)
        curve.append((n, float(np.mean(mses)), float(np.std(mses))))
        logger.info(f"{learner.value} n={n}: mean test MSE {curve[-1][1]:.4f}")
    return first_meeting(curve, threshold_mse), curve


# Model export / import


def _model_rows(model: SegmentedModel):
    for i in range(model.K):
        if model.arrangement is Arrangement.UNIFIED:
            values = list(model.unified_weights[i])
        else:
            values = list(model.agent_weights[i])
            if model.mode is Mode.DEPENDENT and i > 0:
                values.append(model.context[i])
        values.append(model.biases[i])
        for j, value in enumerate(values):
            yield i, j, value


def export_model(model: SegmentedModel, path: str) -> None:
    """Write parameters as `segment,index,value` rows plus a .meta sidecar.

    Per segment the weights come first, then the context coefficient (dependent
    per-agent models, agents after the first), then the bias.
    """
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["segment", "index", "value"])
        for i, j, value in _model_rows(model):
            writer.writerow([i, j, format_float(value)])
    with open(path + ".meta", "w") as fp:
        fp.write(
            keyvalue_block(
                [
                    ("arrangement", model.arrangement.value),
                    ("mode", model.mode.value),
                    ("K", model.K),
                    ("p", model.p),
                    ("parameter_count", model.parameter_count),
                ]
            )
        )


def import_model(path: str) -> SegmentedModel:
    with open(path + ".meta") as fp:
        meta = parse_keyvalue_block(fp.read())
    arrangement = Arrangement(meta["arrangement"])
    mode = Mode(meta["mode"])
    K, p = int(meta["K"]), int(meta["p"])
    values = {}
    with open(path, newline="") as fp:
        reader = csv.DictReader(fp)
        for row in reader:
            values.setdefault(int(row["segment"]), []).append((int(row["index"]), float(row["value"])))
    segments = [[v for _j, v in sorted(values.get(i, []))] for i in range(K)]
    biases = np.array([segment[-1] for segment in segments])
    if arrangement is Arrangement.UNIFIED:
        return SegmentedModel(
            arrangement, mode, K, p, biases,
            unified_weights=np.array([segment[: K * p] for segment in segments]),
        )
    context = None
    if mode is Mode.DEPENDENT:
        context = np.array([segment[p] if i > 0 else 0.0 for i, segment in enumerate(segments)])
    return SegmentedModel(
        arrangement, mode, K, p, biases,
        agent_weights=np.array([segment[:p] for segment in segments]),
        context=context,
    )
