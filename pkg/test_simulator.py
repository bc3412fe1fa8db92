#!/usr/bin/env python3
"""
Monte Carlo 실험 테스트
시드 분할, 워커 수 무관 재현성, 상한 처리, 조건부 접미사 샘플링
"""

import numpy as np
import pytest

import chain
from chain import BitString, ChainConfig, MutationKind, SelectionRule
from config import ConfigError
from simulator import (
    ExperimentPlan, SampleSet, collect_level_transitions, collect_suffix_samples,
    derive_substream_seed, expected_level_probs, run_experiment,
)
from stats_tests import chi_square_gof, summarize


def test_substream_seeds_are_stable_and_distinct():
    seeds = [derive_substream_seed(42, i) for i in range(1000)]
    assert seeds == [derive_substream_seed(42, i) for i in range(1000)]
    assert len(set(seeds)) == 1000
    assert derive_substream_seed(42, 0) != derive_substream_seed(43, 0)


def test_plan_validation():
    config = ChainConfig(4)
    with pytest.raises(ConfigError):
        ExperimentPlan(config, replicates=0)
    with pytest.raises(ConfigError):
        ExperimentPlan(config, replicates=10, master_seed=-1)
    with pytest.raises(ConfigError):
        ExperimentPlan(config, replicates=10, initial=BitString.from_text("11"))
    with pytest.raises(ConfigError):
        ExperimentPlan(config, replicates=10, engine="warp")


def test_plan_to_dict():
    plan = ExperimentPlan(ChainConfig(5, MutationKind.bernoulli(1.0), SelectionRule.NON_STRICT),
                          replicates=7, master_seed=3)
    data = plan.to_dict()
    assert data["n"] == 5
    assert data["mutation"] == "bernoulli"
    assert data["c"] == 1.0
    assert data["rule"] == "nonstrict"
    assert data["R"] == 7
    assert data["initial"] == "uniform"


def test_results_do_not_depend_on_workers():
    plan = ExperimentPlan(ChainConfig(12, MutationKind.bernoulli(1.0)), replicates=600,
                          master_seed=99)
    serial = run_experiment(plan, workers=1)
    parallel = run_experiment(plan, workers=2)
    assert serial.records == parallel.records
    assert [r.replicate_index for r in serial.records] == list(range(600))


def test_same_seed_same_samples_different_seed_differs():
    config = ChainConfig(15)
    a = run_experiment(ExperimentPlan(config, replicates=200, master_seed=1), workers=1)
    b = run_experiment(ExperimentPlan(config, replicates=200, master_seed=1), workers=1)
    c = run_experiment(ExperimentPlan(config, replicates=200, master_seed=2), workers=1)
    assert np.array_equal(a.hitting_times(), b.hitting_times())
    assert not np.array_equal(a.hitting_times(), c.hitting_times())


def test_single_replicate_from_optimum():
    plan = ExperimentPlan(ChainConfig(1), replicates=1, initial=BitString.from_text("1"))
    samples = run_experiment(plan, workers=1)
    assert len(samples) == 1
    assert samples.records[0].hitting_time == 0


def test_capped_runs_are_kept_and_counted(caplog):
    plan = ExperimentPlan(ChainConfig(30, max_iters=10), replicates=20)
    samples = run_experiment(plan, workers=1)
    assert len(samples) == 20
    assert samples.capped_count == 20
    assert samples.hitting_times().size == 0
    assert "상한" in caplog.text


def test_sample_set_requires_complete_order():
    plan = ExperimentPlan(ChainConfig(3), replicates=3)
    records = run_experiment(plan, workers=1).records
    with pytest.raises(ValueError):
        SampleSet(records=records[::-1], plan=plan)


def test_oneflip_mean_within_standard_errors():
    n = 40
    samples = run_experiment(ExperimentPlan(ChainConfig(n), replicates=3000, master_seed=5),
                             workers=1)
    summary = summarize(samples.hitting_times())
    assert abs(summary.mean - n * n / 2) < 4 * summary.std_error


def test_theta_values_shape():
    samples = run_experiment(ExperimentPlan(ChainConfig(10), replicates=50), workers=1)
    assert samples.theta_values().shape == (50,)
    assert samples.initial_zeros().max() <= 10


# === 조건부 접미사 샘플링 ===

@pytest.mark.parametrize("direct", [False, True])
def test_suffix_samples_uniform(direct):
    table = collect_suffix_samples(5, 1.0, 1, 20_000, master_seed=4, direct=direct)
    assert table.complete
    assert table.obtained == 20_000
    assert len(table.counts) == 8
    assert table.labels[0] == "000" and table.labels[-1] == "111"
    report = chi_square_gof(table.counts, np.full(8, 1 / 8))
    assert report.passed


@pytest.mark.parametrize("rule", list(SelectionRule))
def test_suffix_samples_uniform_under_both_rules(rule):
    table = collect_suffix_samples(5, 1.0, 1, 10_000, master_seed=12, rule=rule)
    assert table.complete
    assert chi_square_gof(table.counts, np.full(8, 1 / 8)).passed


def test_suffix_samples_follow_the_mutation_operator(monkeypatch):
    # 접두사 유지, 나머지 1, 마지막 비트 0 으로 만드는 변이 → 접미사는 항상 110
    def fixed_mutation(x, c, rng):
        return BitString((1,) * (x.n - 1) + (0,))

    monkeypatch.setattr(chain, "mutate_bernoulli", fixed_mutation)
    table = collect_suffix_samples(5, 1.0, 1, 2000, master_seed=4)
    assert table.counts[0b110] == 2000
    assert not chi_square_gof(table.counts, np.full(8, 1 / 8)).passed

    levels = collect_level_transitions(5, 1.0, 0, 2000, master_seed=4)
    assert levels.counts.tolist() == [0, 0, 0, 2000, 0]


def test_suffix_samples_reproducible():
    a = collect_suffix_samples(5, 1.0, 1, 5000, master_seed=8)
    b = collect_suffix_samples(5, 1.0, 1, 5000, master_seed=8)
    assert np.array_equal(a.counts, b.counts)


def test_suffix_shortfall_is_reported_not_raised(caplog):
    table = collect_suffix_samples(6, 1.0, 4, 1000, master_seed=0, draw_budget=64)
    assert not table.complete
    assert table.obtained < table.requested
    assert table.attempts == 64
    assert "부족" in caplog.text


def test_suffix_rejects_bad_level():
    with pytest.raises(ConfigError):
        collect_suffix_samples(5, 1.0, 5, 100)
    with pytest.raises(ConfigError):
        collect_suffix_samples(3, 3.0, 1, 100)


def test_level_transitions_match_law():
    n = 5
    table = collect_level_transitions(n, 1.0, 0, 20_000, master_seed=6)
    assert table.labels == ("1", "2", "3", "4", "5")
    report = chi_square_gof(table.counts, expected_level_probs(n, 0))
    assert report.passed


def test_level_transitions_match_law_nonstrict():
    n = 5
    table = collect_level_transitions(n, 1.0, 0, 20_000, master_seed=9,
                                      rule=SelectionRule.NON_STRICT)
    report = chi_square_gof(table.counts, expected_level_probs(n, 0))
    assert report.passed
