"""
Closed-form PAC sample-complexity calculators for SARL and MARL.

All bounds hold up to a universal constant ``c`` (default 1.0) and use the
natural logarithm. Sample counts are returned as reals; rounding up is the
caller's choice. Inputs whose logarithms would be non-positive are rejected
with VacuousBoundError rather than clamped.

The functions here are pure; they are safe to call from any thread.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from .errors import (
    AlignmentInfeasibleError,
    RegimeMismatchError,
    VacuousBoundError,
    ValidationError,
)


class Regime(str, Enum):
    INDEPENDENT = "independent"
    DEPENDENT = "dependent"
    MISALIGNED = "misaligned"


class Recommendation(str, Enum):
    MARL = "MARL"
    SARL = "SARL"
    INDETERMINATE = "Indeterminate"


def _require(condition: bool, field_name: str, message: str) -> None:
    if not condition:
        raise ValidationError(f"{field_name}: {message}", field=field_name)


def _is_finite_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _check_accuracy(epsilon: float, delta: float, c: float) -> None:
    _require(_is_finite_number(epsilon) and 0.0 < epsilon < 1.0, "epsilon", "must lie in (0, 1)")
    _require(_is_finite_number(delta) and 0.0 < delta < 1.0, "delta", "must lie in (0, 1)")
    _require(_is_finite_number(c) and c > 0.0, "c", "must be > 0")


def _log_of(argument: float, constraint: str) -> float:
    if not argument > 1.0:
        raise VacuousBoundError(constraint, argument)
    return math.log(argument)


@dataclass(frozen=True)
class SarlInputs:
    """Parameters of the unified single-agent policy class."""

    d: float
    B: float
    L_step: float
    T_max: float
    epsilon: float
    delta: float
    c: float = 1.0

    @property
    def L_seq(self) -> float:
        return self.T_max * self.L_step

    def validate(self) -> None:
        _require(_is_finite_number(self.d) and self.d >= 1, "d", "must be >= 1")
        _require(_is_finite_number(self.B) and self.B > 0, "B", "must be > 0")
        _require(_is_finite_number(self.L_step) and self.L_step > 0, "L_step", "must be > 0")
        _require(_is_finite_number(self.T_max) and self.T_max >= 1, "T_max", "must be >= 1")
        _check_accuracy(self.epsilon, self.delta, self.c)


@dataclass(frozen=True)
class AgentSpec:
    """One agent's effective dimension, parameter radius and segment length cap."""

    d: float
    B: float
    T_max: float


@dataclass(frozen=True)
class MarlInputs:
    """Parameters of a K-agent system sharing one per-token Lipschitz constant."""

    agents: Tuple[AgentSpec, ...]
    L_step: float
    epsilon: float
    delta: float
    alpha: float = 0.0
    c: float = 1.0
    shared_dim: float = 0

    @classmethod
    def homogeneous(
        cls, K: int, d: float, B: float, T_max: float, L_step: float,
        epsilon: float, delta: float, alpha: float = 0.0, c: float = 1.0,
        shared_dim: float = 0,
    ) -> "MarlInputs":
        return cls(
            agents=tuple(AgentSpec(d=d, B=B, T_max=T_max) for _ in range(K)),
            L_step=L_step, epsilon=epsilon, delta=delta,
            alpha=alpha, c=c, shared_dim=shared_dim,
        )

    @property
    def K(self) -> int:
        return len(self.agents)

    @property
    def L_seq(self) -> List[float]:
        return [agent.T_max * self.L_step for agent in self.agents]

    @property
    def d_sum(self) -> float:
        return effective_dimensions([a.d for a in self.agents], self.shared_dim)[0]

    @property
    def d_tilde(self) -> float:
        return effective_dimensions([a.d for a in self.agents], self.shared_dim)[1]

    @property
    def gamma(self) -> float:
        return max(L * agent.B for L, agent in zip(self.L_seq, self.agents))

    def validate(self) -> None:
        _require(self.K >= 1, "K", "at least one agent is required")
        for i, agent in enumerate(self.agents):
            _require(_is_finite_number(agent.d) and agent.d >= 1, f"d_{i + 1}", "must be >= 1")
            _require(_is_finite_number(agent.B) and agent.B > 0, f"B_{i + 1}", "must be > 0")
            _require(
                _is_finite_number(agent.T_max) and agent.T_max >= 1,
                f"T_max_{i + 1}", "must be >= 1",
            )
        _require(_is_finite_number(self.L_step) and self.L_step > 0, "L_step", "must be > 0")
        _require(_is_finite_number(self.alpha) and self.alpha >= 0, "alpha", "must be >= 0")
        _require(
            _is_finite_number(self.shared_dim) and self.shared_dim >= 0,
            "shared_dim", "must be >= 0",
        )
        _check_accuracy(self.epsilon, self.delta, self.c)


@dataclass(frozen=True)
class ComplexityBound:
    """A bound value together with the parts it is assembled from.

    ``n_samples == constant_used * (entropy_term + confidence_term) /
    accuracy_denominator`` holds exactly.
    """

    n_samples: float
    entropy_term: float
    confidence_term: float
    accuracy_denominator: float
    constant_used: float

    @classmethod
    def assemble(cls, entropy: float, confidence: float, denominator: float, c: float):
        return cls(
            n_samples=c * (entropy + confidence) / denominator,
            entropy_term=entropy,
            confidence_term=confidence,
            accuracy_denominator=denominator,
            constant_used=c,
        )

    def items(self):
        return [
            ("n_samples", self.n_samples),
            ("entropy_term", self.entropy_term),
            ("confidence_term", self.confidence_term),
            ("accuracy_denominator", self.accuracy_denominator),
            ("constant_used", self.constant_used),
        ]


@dataclass(frozen=True)
class ComparisonReport:
    regime: Regime
    n_sarl: float
    n_marl: float
    ratio: float
    condition_holds: bool
    recommendation: Recommendation
    factor_A: Optional[float] = None
    factor_C: Optional[float] = None
    kappa_d: Optional[float] = None
    kappa_l: Optional[float] = None
    ratio_cap: Optional[float] = None
    entropy_ratio: Optional[float] = None
    notes: Tuple[str, ...] = field(default_factory=tuple)

    def items(self):
        rows = [
            ("regime", self.regime.value),
            ("n_sarl", self.n_sarl),
            ("n_marl", self.n_marl),
            ("ratio", self.ratio),
        ]
        for key in ("factor_A", "factor_C", "kappa_d", "kappa_l", "ratio_cap", "entropy_ratio"):
            value = getattr(self, key)
            if value is not None:
                rows.append((key, value))
        rows.append(("condition_holds", self.condition_holds))
        rows.append(("recommendation", self.recommendation.value))
        return rows


def effective_dimensions(private_dims: Sequence[float], shared_dim: float = 0) -> Tuple[float, float]:
    """Effective (sum, max) dimensions when agents share a parameter block.

    The shared block is counted once in the sum and added to every agent's
    private block for the maximum.
    """
    _require(shared_dim >= 0, "shared_dim", "must be >= 0")
    for i, dim in enumerate(private_dims):
        _require(dim >= 0, f"private_dims[{i}]", "must be >= 0")
    if not any(dim >= 1 for dim in private_dims) and not shared_dim >= 1:
        raise ValidationError(
            "private_dims/shared_dim: at least one private dimension or the shared "
            "dimension must be >= 1",
            field="private_dims",
        )
    largest = max(private_dims) if private_dims else 0
    return shared_dim + sum(private_dims), shared_dim + largest


def covering_entropy_sarl(d: float, B: float, L_seq: float, epsilon: float, c: float = 1.0) -> float:
    """Log covering number d * ln(c * L_seq * B / epsilon) of the value class."""
    return d * _log_of(c * L_seq * B / epsilon, "c*L_seq*B/epsilon")


def covering_entropy_marl(m: MarlInputs, L_rho: Optional[float] = None) -> float:
    """Covering entropy of the K-ary aggregated value class.

    ``L_rho`` is the Lipschitz constant of the aggregation map; the default 1/K
    (averaging) cancels the factor K inside the logarithm.
    """
    m.validate()
    if L_rho is None:
        L_rho = 1.0 / m.K
    _require(L_rho > 0, "L_rho", "must be > 0")
    scale = m.c * (L_rho * m.K)
    total = 0.0
    for i, (L, agent) in enumerate(zip(m.L_seq, m.agents)):
        total += agent.d * _log_of(scale * L * agent.B / m.epsilon, f"c*L_rho*K*L_seq_{i + 1}*B_{i + 1}/epsilon")
    if m.shared_dim:
        total += m.shared_dim * _log_of(scale * m.gamma / m.epsilon, "c*L_rho*K*gamma/epsilon")
    return total


def sarl_bound(s: SarlInputs) -> ComplexityBound:
    """Sample complexity of the unified single-agent learner."""
    s.validate()
    entropy = s.d * _log_of(s.L_seq * s.B / s.epsilon, "L_seq*B/epsilon")
    return ComplexityBound.assemble(entropy, math.log(1.0 / s.delta), s.epsilon ** 2, s.c)


def _require_aligned(m: MarlInputs, regime: str) -> None:
    if m.alpha != 0:
        raise RegimeMismatchError(
            f"alpha: the {regime} regime assumes an exact decomposition (alpha = 0), got {m.alpha!r}",
            field="alpha",
        )


def marl_bound_dependent(m: MarlInputs) -> ComplexityBound:
    """Sample complexity of K sequential agents on dependent subtasks."""
    m.validate()
    _require_aligned(m, "dependent")
    entropy = 0.0
    for i, (L, agent) in enumerate(zip(m.L_seq, m.agents)):
        entropy += agent.d * _log_of(L * agent.B / m.epsilon, f"L_seq_{i + 1}*B_{i + 1}/epsilon")
    if m.shared_dim:
        entropy += m.shared_dim * _log_of(m.gamma / m.epsilon, "gamma/epsilon")
    confidence = math.log(m.K / m.delta)
    return ComplexityBound.assemble(entropy, confidence, (m.epsilon / m.K) ** 2, m.c)


def marl_bound_independent(m: MarlInputs) -> ComplexityBound:
    """Sample complexity of K agents on independent subtasks; the hardest agent dominates."""
    m.validate()
    _require_aligned(m, "independent")
    entropy = m.d_tilde * _log_of(m.gamma / m.epsilon, "gamma/epsilon")
    return ComplexityBound.assemble(entropy, math.log(1.0 / m.delta), m.epsilon ** 2, m.c)


def marl_bound_misaligned(m: MarlInputs) -> ComplexityBound:
    """Sample complexity when the independent decomposition is off by alpha."""
    m.validate()
    if not m.epsilon > 2.0 * m.alpha:
        raise AlignmentInfeasibleError(m.epsilon, m.alpha)
    slack = m.epsilon - 2.0 * m.alpha
    entropy = m.d_tilde * _log_of(m.K * m.gamma / slack, "K*gamma/(epsilon-2*alpha)")
    return ComplexityBound.assemble(entropy, math.log(1.0 / m.delta), slack ** 2, m.c)


def _homogeneous_with(s: SarlInputs, m: MarlInputs) -> bool:
    if m.shared_dim:
        return False
    K = m.K
    for agent in m.agents:
        if not math.isclose(agent.d, s.d / K, rel_tol=1e-12):
            return False
        if not math.isclose(agent.T_max, s.T_max / K, rel_tol=1e-12):
            return False
        if agent.B > s.B:
            return False
    return True


def homogeneous_ratio_cap(s: SarlInputs, K: int) -> float:
    """Upper bound on N_MARL/N_SARL for K homogeneous independent segments."""
    entropy = s.d * math.log(s.L_seq * s.B / s.epsilon)
    confidence = math.log(1.0 / s.delta)
    return 1.0 / K + (1.0 - 1.0 / K) * confidence / (entropy + confidence)


def ratio_independent(s: SarlInputs, m: MarlInputs) -> ComparisonReport:
    """Compare MARL on independent subtasks against SARL."""
    _require_aligned(m, "independent")
    n_sarl = sarl_bound(s).n_samples
    n_marl = marl_bound_independent(m).n_samples
    ratio = n_marl / n_sarl
    holds = m.d_tilde <= s.d and m.gamma <= s.L_seq * s.B
    cap = homogeneous_ratio_cap(s, m.K) if _homogeneous_with(s, m) else None
    if holds and ratio < 1.0:
        recommendation = Recommendation.MARL
    else:
        recommendation = Recommendation.INDETERMINATE
    return ComparisonReport(
        regime=Regime.INDEPENDENT,
        n_sarl=n_sarl,
        n_marl=n_marl,
        ratio=ratio,
        condition_holds=holds,
        recommendation=recommendation,
        ratio_cap=cap,
    )


def ratio_dependent(s: SarlInputs, m: MarlInputs) -> ComparisonReport:
    """Compare MARL on dependent subtasks against SARL via the K^2 * A * C factorization."""
    _require_aligned(m, "dependent")
    sarl = sarl_bound(s)
    marl = marl_bound_dependent(m)
    factor_A = marl.entropy_term / sarl.entropy_term
    factor_C = (1.0 + marl.confidence_term / marl.entropy_term) / (
        1.0 + sarl.confidence_term / sarl.entropy_term
    )
    ratio = marl.n_samples / sarl.n_samples
    holds = ratio <= 1.0
    return ComparisonReport(
        regime=Regime.DEPENDENT,
        n_sarl=sarl.n_samples,
        n_marl=marl.n_samples,
        ratio=ratio,
        condition_holds=holds,
        recommendation=Recommendation.MARL if holds else Recommendation.SARL,
        factor_A=factor_A,
        factor_C=factor_C,
    )


def large_model_heuristic(s: SarlInputs, m: MarlInputs) -> Tuple[float, bool]:
    """K^2 * sum(d_i) / d and whether it is <= 1 (the large-model MARL criterion)."""
    s.validate()
    m.validate()
    value = m.K ** 2 * m.d_sum / s.d
    return value, value <= 1.0


def misalignment_condition(s: SarlInputs, m: MarlInputs) -> ComparisonReport:
    """Decide whether an imposed independent decomposition with gap alpha still pays off."""
    m.validate()
    if not m.epsilon > 2.0 * m.alpha:
        raise AlignmentInfeasibleError(m.epsilon, m.alpha)
    sarl = sarl_bound(s)
    marl = marl_bound_misaligned(m)
    slack = m.epsilon - 2.0 * m.alpha
    kappa_d = m.d_tilde / s.d
    kappa_l = math.log(m.K * m.gamma / slack) / math.log(s.L_seq * s.B / s.epsilon)
    product = kappa_d * kappa_l
    threshold = (1.0 - 2.0 * m.alpha / m.epsilon) ** 2
    holds = product <= threshold
    return ComparisonReport(
        regime=Regime.MISALIGNED,
        n_sarl=sarl.n_samples,
        n_marl=marl.n_samples,
        ratio=marl.n_samples / sarl.n_samples,
        condition_holds=holds,
        recommendation=Recommendation.MARL if holds else Recommendation.SARL,
        kappa_d=kappa_d,
        kappa_l=kappa_l,
        entropy_ratio=product / threshold,
    )
