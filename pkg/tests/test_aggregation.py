import logging

import numpy as np
import pytest

from fedqual.aggregation import (
    AggregationConfig,
    ClientSummary,
    aggregate,
    anneal_schedule,
    annealed_score,
    effective_info,
    round_weights,
    soft_weights,
)
from fedqual.learner import ModelParams


def summary(client_id, n, q, fill=0.0):
    params = ModelParams(np.full((2, 3), fill), np.full(2, fill))
    return ClientSummary(client_id=client_id, sample_count=n, quality=q, params=params)


class TestEffectiveInfo:
    def test_zero_quality_annihilates(self):
        assert effective_info(100, 0.0) == 0.0

    def test_unit(self):
        assert effective_info(1, 1.0) == 1.0

    def test_product(self):
        assert effective_info(200, 7.0) == 1400.0

    def test_rejects_zero_samples(self):
        with pytest.raises(ValueError):
            effective_info(0, 1.0)


class TestAnnealedScore:
    def test_rho_zero_is_effective_info(self):
        assert annealed_score(100, 7.0, 0.0) == effective_info(100, 7.0)

    def test_rho_one_is_sample_count(self):
        assert annealed_score(100, 7.0, 1.0) == 100.0

    def test_rho_one_exact_even_for_zero_quality(self):
        assert annealed_score(50, 0.0, 1.0) == 50.0

    def test_closed_form_power(self):
        assert annealed_score(100, 0.5, 0.5) == pytest.approx(100 * 0.5**0.5, abs=1e-12)
        assert annealed_score(100, 0.5, 0.5) == pytest.approx(70.7107, abs=1e-4)

    def test_zero_quality_scores_zero_below_one(self, caplog):
        with caplog.at_level(logging.WARNING):
            assert annealed_score(100, 0.0, 0.5) == 0.0
        assert any("zero quality" in record.message for record in caplog.records)

    def test_rejects_rho_outside_unit_interval(self):
        with pytest.raises(ValueError):
            annealed_score(10, 1.0, 1.5)


class TestAnnealSchedule:
    def test_starts_at_zero(self):
        cfg = AggregationConfig(anneal_warmup_rounds=10)
        assert anneal_schedule(0, cfg) == 0.0

    def test_saturates_at_warmup(self):
        cfg = AggregationConfig(anneal_warmup_rounds=10)
        for t in (10, 11, 100):
            assert anneal_schedule(t, cfg) == 1.0

    def test_linear_midpoint(self):
        cfg = AggregationConfig(anneal_warmup_rounds=10)
        assert anneal_schedule(5, cfg) == pytest.approx(0.5, abs=1e-15)

    def test_nondecreasing(self):
        cfg = AggregationConfig(anneal_warmup_rounds=7)
        values = [anneal_schedule(t, cfg) for t in range(20)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_constant_schedules(self):
        zero = AggregationConfig(anneal_warmup_rounds=5, schedule="always_zero")
        one = AggregationConfig(anneal_warmup_rounds=5, schedule="always_one")
        assert anneal_schedule(3, zero) == 0.0
        assert anneal_schedule(3, one) == 1.0

    def test_rejects_negative_round(self):
        with pytest.raises(ValueError):
            anneal_schedule(-1, AggregationConfig())


class TestSoftWeights:
    def test_proportional_at_gamma_one(self):
        assert np.array_equal(soft_weights([2.0, 1.0, 1.0], 1.0), [0.5, 0.25, 0.25])

    def test_square_sharpening(self):
        assert np.allclose(soft_weights([2.0, 1.0], 2.0), [0.8, 0.2], atol=1e-12)

    def test_equal_scores_uniform(self):
        assert np.allclose(soft_weights([3.0] * 7, 1.0), 1 / 7, atol=1e-15)
        assert np.allclose(soft_weights([3.0] * 7, 2.5), 1 / 7, atol=1e-15)

    def test_simplex_output(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            scores = rng.uniform(0.0, 100.0, size=rng.integers(1, 12))
            if not np.any(scores > 0):
                continue
            for gamma in (0.5, 1.0, 3.0):
                w = soft_weights(scores, gamma)
                assert np.all(w >= 0.0)
                assert abs(w.sum() - 1.0) <= 1e-12

    def test_scale_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            scores = rng.uniform(0.1, 50.0, size=6)
            for gamma in (0.5, 1.0, 2.0, 7.0):
                base = soft_weights(scores, gamma)
                scaled = soft_weights(scores * 913.7, gamma)
                assert np.allclose(base, scaled, atol=1e-12)

    def test_huge_scores_do_not_overflow(self):
        w = soft_weights([1e250, 1e249], 4.0)
        assert np.all(np.isfinite(w))
        assert abs(w.sum() - 1.0) <= 1e-12

    def test_zero_score_gets_zero_weight(self):
        w = soft_weights([1.0, 0.0, 3.0], 2.0)
        assert w[1] == 0.0
        assert abs(w.sum() - 1.0) <= 1e-12

    def test_all_zero_falls_back_to_uniform(self, caplog):
        with caplog.at_level(logging.WARNING):
            w = soft_weights([0.0, 0.0], 1.0)
        assert np.array_equal(w, [0.5, 0.5])
        assert any("uniform" in record.message for record in caplog.records)

    def test_rejects_negative_scores(self):
        with pytest.raises(ValueError):
            soft_weights([1.0, -0.5], 1.0)


class TestAggregate:
    def test_single_weight_returns_that_client(self):
        contributors = [summary(0, 10, 1.0, fill=3.5), summary(1, 10, 1.0, fill=-2.0)]
        out = aggregate(contributors, [1.0, 0.0])
        assert np.array_equal(out.weights, contributors[0].params.weights)
        assert np.array_equal(out.bias, contributors[0].params.bias)

    def test_identical_params_fixed_point(self):
        contributors = [summary(0, 5, 1.0, fill=1.25), summary(1, 9, 2.0, fill=1.25)]
        out = aggregate(contributors, [0.3, 0.7])
        assert np.allclose(out.weights, 1.25, atol=1e-15)

    def test_convex_combination(self):
        contributors = [summary(0, 5, 1.0, fill=0.0), summary(1, 5, 1.0, fill=1.0)]
        out = aggregate(contributors, [0.25, 0.75])
        assert np.all(out.weights == 0.75)
        assert np.all(out.bias == 0.75)

    def test_permutation_equivariant_bitwise(self):
        rng = np.random.default_rng(3)
        contributors = []
        for cid in range(5):
            params = ModelParams(rng.normal(size=(3, 4)), rng.normal(size=3))
            contributors.append(ClientSummary(cid, 10 + cid, 1.0 + cid, params))
        weights = rng.dirichlet(np.ones(5))
        base = aggregate(contributors, weights)
        perm = [3, 0, 4, 1, 2]
        shuffled = aggregate([contributors[i] for i in perm], [weights[i] for i in perm])
        assert np.array_equal(base.weights, shuffled.weights)
        assert np.array_equal(base.bias, shuffled.bias)

    def test_rejects_bad_weight_sum(self):
        contributors = [summary(0, 5, 1.0), summary(1, 5, 1.0)]
        with pytest.raises(ValueError):
            aggregate(contributors, [0.6, 0.6])

    def test_rejects_shape_mismatch(self):
        a = summary(0, 5, 1.0)
        b = ClientSummary(1, 5, 1.0, ModelParams(np.zeros((3, 3)), np.zeros(3)))
        with pytest.raises(ValueError):
            aggregate([a, b], [0.5, 0.5])


class TestRoundWeights:
    def test_fedavg_sample_size(self):
        cfg = AggregationConfig(mode="fedavg")
        contributors = [summary(0, 30, 1.0), summary(1, 10, 5.0)]
        assert np.array_equal(round_weights(contributors, 0, cfg), [0.75, 0.25])

    def test_fedqual_round_zero_by_hand(self):
        cfg = AggregationConfig(mode="fedqual", gamma_temp=1.0, anneal_warmup_rounds=10)
        contributors = [summary(0, 100, 2.0), summary(1, 10, 10.0)]
        # scores N*q = [200, 100]
        assert np.allclose(round_weights(contributors, 0, cfg), [2 / 3, 1 / 3], atol=1e-15)

    def test_fedqual_after_warmup_equals_fedavg(self):
        fedqual_cfg = AggregationConfig(mode="fedqual", gamma_temp=1.0, anneal_warmup_rounds=10)
        fedavg_cfg = AggregationConfig(mode="fedavg", gamma_temp=1.0, anneal_warmup_rounds=10)
        contributors = [summary(0, 100, 2.0), summary(1, 10, 10.0)]
        late = round_weights(contributors, 10, fedqual_cfg)
        assert np.allclose(late, [100 / 110, 10 / 110], atol=1e-15)
        assert np.array_equal(late, round_weights(contributors, 10, fedavg_cfg))

    def test_quality_only_ignores_round(self):
        cfg = AggregationConfig(mode="quality_only", gamma_temp=1.0, anneal_warmup_rounds=5)
        contributors = [summary(0, 10, 4.0), summary(1, 10, 1.0)]
        for t in (0, 3, 50):
            assert np.array_equal(round_weights(contributors, t, cfg), [0.8, 0.2])

    def test_quality_dominance_at_round_zero(self):
        cfg = AggregationConfig(mode="fedqual", gamma_temp=1.0, anneal_warmup_rounds=10)
        contributors = [summary(0, 50, 9.0), summary(1, 50, 3.0)]
        w = round_weights(contributors, 0, cfg)
        assert w[0] > w[1]

    def test_simplex_for_all_modes(self):
        rng = np.random.default_rng(6)
        for mode in ("fedavg", "fedqual", "quality_only"):
            cfg = AggregationConfig(mode=mode, gamma_temp=1.3, anneal_warmup_rounds=4)
            for t in range(8):
                contributors = [
                    summary(i, int(rng.integers(1, 500)), float(rng.uniform(0.5, 10)))
                    for i in range(6)
                ]
                w = round_weights(contributors, t, cfg)
                assert np.all(w >= 0.0)
                assert abs(w.sum() - 1.0) <= 1e-12


class TestConfig:
    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError):
            AggregationConfig(mode="median")

    def test_rejects_bad_gamma(self):
        with pytest.raises(ValueError):
            AggregationConfig(gamma_temp=0.0)

    def test_rejects_bad_warmup(self):
        with pytest.raises(ValueError):
            AggregationConfig(anneal_warmup_rounds=0)
