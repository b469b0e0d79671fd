#!/usr/bin/env python3
"""
Tests for the closed-form sample-complexity calculators.

Expected values are recomputed here from the closed forms with math.log before
being compared with the library.
"""

import math

import numpy as np
import pytest

from marl_bench import bounds
from marl_bench.bounds import AgentSpec, MarlInputs, Recommendation, Regime, SarlInputs
from marl_bench.errors import (
    AlignmentInfeasibleError,
    RegimeMismatchError,
    VacuousBoundError,
    ValidationError,
)

EPS = 0.1
DELTA = 0.05


def sarl_example(**changes):
    values = dict(d=10, B=1.0, L_step=1.0, T_max=100, epsilon=EPS, delta=DELTA)
    values.update(changes)
    return SarlInputs(**values)


def homogeneous(K=2, d=5, T=50, B=1.0, **changes):
    values = dict(L_step=1.0, epsilon=EPS, delta=DELTA)
    values.update(changes)
    return MarlInputs.homogeneous(K=K, d=d, B=B, T_max=T, **values)


def random_sarl(rng):
    return SarlInputs(
        d=float(rng.uniform(1, 100)),
        B=float(rng.uniform(0.5, 5)),
        L_step=float(rng.uniform(0.5, 2)),
        T_max=float(rng.uniform(10, 1000)),
        epsilon=float(rng.uniform(0.01, 0.5)),
        delta=float(rng.uniform(0.001, 0.5)),
        c=float(rng.uniform(0.5, 2)),
    )


def single_agent(s, alpha=0.0):
    return MarlInputs(
        agents=(AgentSpec(d=s.d, B=s.B, T_max=s.T_max),),
        L_step=s.L_step,
        epsilon=s.epsilon,
        delta=s.delta,
        alpha=alpha,
        c=s.c,
    )


class TestWorkedExamples:
    def test_sarl_bound(self):
        expected = (10 * math.log(1000) + math.log(20)) / 0.01
        bound = bounds.sarl_bound(sarl_example())
        assert bound.n_samples == pytest.approx(expected, rel=1e-6)
        assert abs(bound.n_samples - 7207.33) < 0.01

    def test_sarl_bound_unit_logs(self):
        s = SarlInputs(d=1, B=math.e * 0.5, L_step=1, T_max=1, epsilon=0.5, delta=math.exp(-1))
        assert bounds.sarl_bound(s).n_samples == pytest.approx(8.0, rel=1e-12)

    def test_sarl_bound_decreases_with_epsilon(self):
        assert bounds.sarl_bound(sarl_example(epsilon=0.2)).n_samples < bounds.sarl_bound(sarl_example()).n_samples

    def test_dependent_bound(self):
        expected = 4 * (10 * math.log(500) + math.log(40)) / 0.01
        bound = bounds.marl_bound_dependent(homogeneous())
        assert bound.n_samples == pytest.approx(expected, rel=1e-6)
        assert abs(bound.n_samples - 26333.98) < 0.01

    def test_dependent_bound_grows_with_K(self):
        two = bounds.marl_bound_dependent(homogeneous(K=2, d=10 / 2, T=100 / 2))
        three = bounds.marl_bound_dependent(homogeneous(K=3, d=10 / 3, T=100 / 3))
        assert three.n_samples > two.n_samples

    def test_independent_bound(self):
        expected = (5 * math.log(500) + math.log(20)) / 0.01
        bound = bounds.marl_bound_independent(homogeneous())
        assert bound.n_samples == pytest.approx(expected, rel=1e-6)
        assert abs(bound.n_samples - 3406.88) < 0.01

    def test_independent_bound_depends_only_on_maxima(self):
        m = MarlInputs(
            agents=(AgentSpec(2, 1.0, 10), AgentSpec(5, 1.0, 50), AgentSpec(3, 1.0, 20)),
            L_step=1.0,
            epsilon=EPS,
            delta=DELTA,
        )
        assert m.d_tilde == 5
        assert m.gamma == 50
        assert bounds.marl_bound_independent(m).n_samples == bounds.marl_bound_independent(homogeneous()).n_samples

    def test_misaligned_bound(self):
        expected = (5 * math.log(100 / 0.06) + math.log(20)) / 0.06 ** 2
        bound = bounds.marl_bound_misaligned(homogeneous(alpha=0.02))
        assert bound.n_samples == pytest.approx(expected, rel=1e-6)
        assert abs(bound.n_samples - 11135.7) < 0.1

    def test_misaligned_bound_infeasible(self):
        with pytest.raises(AlignmentInfeasibleError) as info:
            bounds.marl_bound_misaligned(homogeneous(alpha=0.05))
        assert "epsilon must exceed 2*alpha" in str(info.value)
        assert info.value.min_epsilon == pytest.approx(0.1)

    def test_ratio_dependent_factors(self):
        report = bounds.ratio_dependent(sarl_example(), homogeneous())
        A = 10 * math.log(500) / (10 * math.log(1000))
        C = (1 + math.log(40) / (10 * math.log(500))) / (1 + math.log(20) / (10 * math.log(1000)))
        assert report.factor_A == pytest.approx(A, rel=1e-12)
        assert report.factor_C == pytest.approx(C, rel=1e-12)
        assert report.factor_A == pytest.approx(0.89965, abs=1e-5)
        assert report.factor_C == pytest.approx(1.01533, abs=1e-5)
        assert report.ratio == pytest.approx(3.6538, abs=1e-4)
        assert report.ratio == pytest.approx(4 * report.factor_A * report.factor_C, rel=1e-12)
        n_sarl = bounds.sarl_bound(sarl_example()).n_samples
        n_marl = bounds.marl_bound_dependent(homogeneous()).n_samples
        assert report.ratio == n_marl / n_sarl
        assert report.recommendation is Recommendation.SARL
        assert report.regime is Regime.DEPENDENT

    def test_ratio_dependent_single_agent(self):
        s = sarl_example()
        report = bounds.ratio_dependent(s, single_agent(s))
        assert report.factor_A * report.factor_C == pytest.approx(1.0, rel=1e-12)
        assert report.ratio == pytest.approx(1.0, rel=1e-12)

    def test_ratio_dependent_large_model_regime(self):
        # equal log arguments isolate the dimension ratio inside A
        s = sarl_example(d=10_000)
        m = homogeneous(K=2, d=5_000, T=100)
        report = bounds.ratio_dependent(s, m)
        assert abs(report.factor_C - 1.0) < 1e-3
        assert report.factor_A == pytest.approx(m.d_sum / s.d, rel=1e-12)
        value, passes = bounds.large_model_heuristic(s, m)
        assert value == pytest.approx(4.0)
        assert passes is False

    def test_ratio_independent_homogeneous(self):
        report = bounds.ratio_independent(sarl_example(), homogeneous())
        assert report.ratio == pytest.approx(3406.877 / 7207.3285, rel=1e-5)
        assert report.ratio == pytest.approx(0.4727, abs=1e-4)
        cap = 0.5 + 0.5 * math.log(20) / (10 * math.log(1000) + math.log(20))
        assert report.ratio_cap == pytest.approx(cap, rel=1e-12)
        assert report.ratio <= report.ratio_cap
        assert report.condition_holds
        assert report.recommendation is Recommendation.MARL

    def test_ratio_independent_single_agent(self):
        s = sarl_example()
        report = bounds.ratio_independent(s, single_agent(s))
        assert report.ratio == 1.0
        assert report.recommendation is Recommendation.INDETERMINATE

    def test_ratio_independent_premise_violated(self):
        report = bounds.ratio_independent(sarl_example(d=4), homogeneous())
        assert not report.condition_holds
        assert report.recommendation is Recommendation.INDETERMINATE

    def test_misalignment_condition_fails(self):
        report = bounds.misalignment_condition(sarl_example(), homogeneous(alpha=0.02))
        assert report.kappa_d == pytest.approx(0.5)
        assert report.kappa_l == pytest.approx(math.log(100 / 0.06) / math.log(1000), rel=1e-12)
        assert report.kappa_l == pytest.approx(1.0739, abs=1e-4)
        assert report.kappa_d * report.kappa_l == pytest.approx(0.5370, abs=1e-4)
        assert not report.condition_holds
        assert report.recommendation is Recommendation.SARL

    def test_misalignment_condition_boundary(self):
        s = sarl_example()
        report = bounds.misalignment_condition(s, single_agent(s))
        assert report.kappa_d * report.kappa_l == pytest.approx(1.0, rel=1e-12)
        assert report.condition_holds
        assert report.entropy_ratio == pytest.approx(1.0, rel=1e-12)
        assert report.ratio == pytest.approx(1.0, rel=1e-12)

    def test_misalignment_condition_aligned(self):
        report = bounds.misalignment_condition(sarl_example(), homogeneous())
        assert report.kappa_l == pytest.approx(1.0, rel=1e-12)
        assert report.condition_holds
        assert report.recommendation is Recommendation.MARL


class TestCoveringEntropy:
    def test_sarl_unit(self):
        assert bounds.covering_entropy_sarl(1, math.e * 0.5, 1, 0.5) == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("c, expected", [(1.0, 10 * math.log(1000)), (2.0, 10 * math.log(2000))])
    def test_sarl_values(self, c, expected):
        assert bounds.covering_entropy_sarl(10, 1, 100, 0.1, c) == pytest.approx(expected, rel=1e-12)

    def test_sarl_vacuous(self):
        with pytest.raises(VacuousBoundError):
            bounds.covering_entropy_sarl(10, 1, 0.05, 0.1)

    def test_marl_default_aggregation_cancels(self):
        value = bounds.covering_entropy_marl(homogeneous())
        assert value == pytest.approx(10 * math.log(500), rel=1e-12)
        assert value == pytest.approx(62.146, abs=1e-3)
        assert bounds.covering_entropy_marl(homogeneous(), L_rho=0.5) == value

    def test_marl_unnormalized_sum(self):
        value = bounds.covering_entropy_marl(homogeneous(), L_rho=1.0)
        assert value == pytest.approx(10 * math.log(1000), rel=1e-12)

    def test_marl_single_agent_matches_sarl(self):
        s = sarl_example()
        assert bounds.covering_entropy_marl(single_agent(s), L_rho=1.0) == bounds.covering_entropy_sarl(
            s.d, s.B, s.L_seq, s.epsilon
        )


class TestEffectiveDimensions:
    @pytest.mark.parametrize(
        "private, shared, expected",
        [((5, 5), 0, (10, 5)), ((2, 2, 2), 8, (14, 10)), ((0, 0), 7, (7, 7)), ((), 3, (3, 3))],
    )
    def test_examples(self, private, shared, expected):
        assert bounds.effective_dimensions(private, shared) == expected

    @pytest.mark.parametrize("private, shared", [((), 0), ((0, 0), 0), ((-1, 3), 0)])
    def test_rejects(self, private, shared):
        with pytest.raises(ValidationError):
            bounds.effective_dimensions(private, shared)

    def test_shared_block_enters_bounds(self):
        plain = homogeneous()
        shared = homogeneous(shared_dim=3)
        assert shared.d_tilde == 8
        assert shared.d_sum == 13
        expected = 4 * (10 * math.log(500) + 3 * math.log(500) + math.log(40)) / 0.01
        assert bounds.marl_bound_dependent(shared).n_samples == pytest.approx(expected, rel=1e-12)
        assert bounds.marl_bound_independent(shared).n_samples > bounds.marl_bound_independent(plain).n_samples


class TestValidation:
    @pytest.mark.parametrize(
        "field, value",
        [("d", 0.5), ("B", 0.0), ("L_step", -1.0), ("T_max", 0.5), ("epsilon", 1.0), ("delta", 0.0), ("c", 0.0)],
    )
    def test_sarl_field_out_of_domain(self, field, value):
        with pytest.raises(ValidationError) as info:
            bounds.sarl_bound(sarl_example(**{field: value}))
        assert info.value.field == field
        assert field in str(info.value)

    def test_vacuous_sarl(self):
        with pytest.raises(VacuousBoundError) as info:
            bounds.sarl_bound(sarl_example(T_max=1, L_step=0.05))
        assert "L_seq*B/epsilon" in str(info.value)
        assert isinstance(info.value, ValidationError)

    def test_vacuous_dependent_names_agent(self):
        m = MarlInputs(
            agents=(AgentSpec(5, 1.0, 50), AgentSpec(5, 0.001, 50)),
            L_step=1.0, epsilon=EPS, delta=DELTA,
        )
        with pytest.raises(VacuousBoundError) as info:
            bounds.marl_bound_dependent(m)
        assert "B_2" in str(info.value)

    @pytest.mark.parametrize(
        "operation",
        [bounds.marl_bound_dependent, bounds.marl_bound_independent],
    )
    def test_regime_mismatch(self, operation):
        with pytest.raises(RegimeMismatchError):
            operation(homogeneous(alpha=0.01))

    def test_ratio_operations_reject_alpha(self):
        with pytest.raises(RegimeMismatchError):
            bounds.ratio_independent(sarl_example(), homogeneous(alpha=0.01))
        with pytest.raises(RegimeMismatchError):
            bounds.ratio_dependent(sarl_example(), homogeneous(alpha=0.01))

    def test_negative_alpha(self):
        with pytest.raises(ValidationError):
            bounds.marl_bound_misaligned(homogeneous(alpha=-0.01))

    def test_no_agents(self):
        with pytest.raises(ValidationError):
            bounds.marl_bound_dependent(MarlInputs(agents=(), L_step=1.0, epsilon=EPS, delta=DELTA))


class TestProperties:
    def test_single_agent_collapse(self):
        rng = np.random.default_rng(20240101)
        for _ in range(100):
            s = random_sarl(rng)
            n_sarl = bounds.sarl_bound(s).n_samples
            m = single_agent(s)
            assert bounds.marl_bound_dependent(m).n_samples == pytest.approx(n_sarl, rel=1e-12)
            assert bounds.marl_bound_independent(m).n_samples == pytest.approx(n_sarl, rel=1e-12)
            assert bounds.marl_bound_misaligned(m).n_samples == pytest.approx(
                bounds.marl_bound_independent(m).n_samples, rel=1e-12
            )

    def test_condition_equivalence(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            s = random_sarl(rng)
            K = int(rng.integers(1, 7))
            agents = tuple(
                AgentSpec(
                    d=float(rng.uniform(1, 2 * s.d)),
                    B=float(rng.uniform(0.5, 2) * s.B),
                    T_max=float(rng.uniform(10, s.T_max)),
                )
                for _ in range(K)
            )
            alpha = float(rng.uniform(0, 0.45 * s.epsilon))
            m = MarlInputs(agents, s.L_step, s.epsilon, s.delta, alpha=alpha, c=s.c)
            report = bounds.misalignment_condition(s, m)
            assert report.condition_holds == (report.entropy_ratio <= 1.0)
            slack = s.epsilon - 2 * alpha
            direct = (m.d_tilde * math.log(K * m.gamma / slack) / slack ** 2) / (
                s.d * math.log(s.L_seq * s.B / s.epsilon) / s.epsilon ** 2
            )
            assert report.entropy_ratio == pytest.approx(direct, rel=1e-9)

    def test_homogeneous_cap(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            K = int(rng.integers(2, 9))
            d_i = float(rng.uniform(1, 50))
            T_i = float(rng.uniform(10, 500))
            B = float(rng.uniform(0.5, 5))
            epsilon = float(rng.uniform(0.01, 0.5))
            delta = float(rng.uniform(0.001, 0.5))
            s = SarlInputs(d=K * d_i, B=B, L_step=1.0, T_max=K * T_i, epsilon=epsilon, delta=delta)
            m = MarlInputs.homogeneous(K=K, d=d_i, B=B, T_max=T_i, L_step=1.0, epsilon=epsilon, delta=delta)
            report = bounds.ratio_independent(s, m)
            cap = 1 / K + (1 - 1 / K) * math.log(1 / delta) / (
                s.d * math.log(s.L_seq * B / epsilon) + math.log(1 / delta)
            )
            assert report.ratio_cap == pytest.approx(cap, rel=1e-12)
            assert report.ratio <= cap

    def test_factored_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            s = random_sarl(rng)
            K = int(rng.integers(1, 6))
            agents = tuple(
                AgentSpec(float(rng.uniform(1, s.d)), s.B, float(rng.uniform(10, s.T_max))) for _ in range(K)
            )
            m = MarlInputs(agents, s.L_step, s.epsilon, s.delta, c=s.c)
            report = bounds.ratio_dependent(s, m)
            assert report.ratio == pytest.approx(K ** 2 * report.factor_A * report.factor_C, rel=1e-12)

    def test_reconstruction_is_exact(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            s = random_sarl(rng)
            m = single_agent(s, alpha=0.1 * s.epsilon)
            for bound in (
                bounds.sarl_bound(s),
                bounds.marl_bound_dependent(single_agent(s)),
                bounds.marl_bound_independent(single_agent(s)),
                bounds.marl_bound_misaligned(m),
            ):
                assert bound.n_samples == bound.constant_used * (
                    bound.entropy_term + bound.confidence_term
                ) / bound.accuracy_denominator
                assert all(math.isfinite(v) and v > 0 for _k, v in bound.items())


class TestMonotonicity:
    @pytest.mark.parametrize(
        "field, larger, direction",
        [
            ("epsilon", 0.2, -1),
            ("d", 20, 1),
            ("B", 2.0, 1),
            ("T_max", 200, 1),
            ("delta", 0.01, 1),
        ],
    )
    def test_sarl(self, field, larger, direction):
        base = bounds.sarl_bound(sarl_example()).n_samples
        changed = bounds.sarl_bound(sarl_example(**{field: larger})).n_samples
        assert (changed - base) * direction > 0

    @pytest.mark.parametrize(
        "operation, alpha",
        [
            (bounds.marl_bound_dependent, 0.0),
            (bounds.marl_bound_independent, 0.0),
            (bounds.marl_bound_misaligned, 0.01),
        ],
    )
    @pytest.mark.parametrize(
        "agent_change",
        [dict(d=6), dict(B=1.5), dict(T_max=60)],
    )
    def test_marl_agent_fields(self, operation, alpha, agent_change):
        base = homogeneous(alpha=alpha)
        first = AgentSpec(**{**dict(d=5, B=1.0, T_max=50), **agent_change})
        changed = MarlInputs((first,) + base.agents[1:], 1.0, EPS, DELTA, alpha=alpha)
        assert operation(changed).n_samples > operation(base).n_samples

    @pytest.mark.parametrize(
        "operation, alpha",
        [
            (bounds.marl_bound_dependent, 0.0),
            (bounds.marl_bound_independent, 0.0),
            (bounds.marl_bound_misaligned, 0.01),
        ],
    )
    def test_marl_epsilon_and_delta(self, operation, alpha):
        base = operation(homogeneous(alpha=alpha)).n_samples
        assert operation(homogeneous(alpha=alpha, epsilon=0.2)).n_samples < base
        assert operation(homogeneous(alpha=alpha, delta=0.01)).n_samples > base

    def test_misaligned_increases_with_alpha(self):
        values = [bounds.marl_bound_misaligned(homogeneous(alpha=a)).n_samples for a in (0.0, 0.01, 0.02, 0.04)]
        assert all(b > a for a, b in zip(values, values[1:]))
