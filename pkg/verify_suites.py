"""
검증 스위트
정확 계산, 전이행렬 오라클, Monte Carlo 로 적중시간 정리들을 확인

스위트: oracle, lln, clt, equivalence, lemmas (all = 전부)
각 스위트는 TestReport 목록을 반환
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from chain import (
    BitString, ChainConfig, ChainState, MutationKind, SelectionRule, leading_ones_rows, step,
)
from config import (
    BRUTE_FORCE_MAX_N, CLT_BERNOULLI_KS, CLT_BERNOULLI_VAR_TOL, CLT_ONEFLIP_KS,
    CLT_ONEFLIP_VAR_TOL, CONCENTRATION_DELTA, DEFAULT_C_GRID, DEFAULT_ENGINE,
    DEFAULT_MASTER_SEED, LLN_BERNOULLI_TOL_100, LLN_BERNOULLI_TOL_1000,
    MEAN_RELATIVE_TOLERANCE, SE_MULTIPLIER, TAIL_TOLERANCE, TV_TOLERANCE, ConfigError,
)
from exact_engine import (
    bernoulli_exact_mean, bernoulli_exact_pmf, bernoulli_moments, brute_force_mean,
    brute_force_pmf, default_horizon, m_of_c, negbin_pmf, oneflip_exact_pmf,
    oneflip_moments, sigma2_of_c,
)
from simulator import (
    ExperimentPlan, collect_level_transitions, collect_suffix_samples, expected_level_probs,
    run_experiment,
)
from stats_tests import (
    Ecdf, TestReport, chi_square_merged, concentration_report, ks_one_sample, ks_two_sample,
    relative_error_report, summarize,
)

logger = logging.getLogger(__name__)

SUITES = ("oracle", "lln", "clt", "equivalence", "lemmas")


@dataclass(frozen=True)
class VerifyOptions:
    """
    n / replicates 가 None 이면 각 스위트의 기본 규모 사용
    seed 는 스위트 안에서 검정마다 고정 오프셋을 더해 사용
    """

    n: Optional[int] = None
    replicates: Optional[int] = None
    seed: int = DEFAULT_MASTER_SEED
    workers: Optional[int] = None
    engine: str = DEFAULT_ENGINE


@dataclass
class SuiteResult:
    suite: str
    reports: List[TestReport] = field(default_factory=list)
    runtime_ms: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)


def _simulate(config: ChainConfig, replicates: int, seed: int, options: VerifyOptions):
    plan = ExperimentPlan(config, replicates=replicates, master_seed=seed, engine=options.engine)
    return run_experiment(plan, workers=options.workers)


def _no_capped_report(sample_set, test: str, seed: int) -> TestReport:
    return TestReport.below(test, sample_set.capped_count, 1, n=sample_set.plan.config.n,
                            R=sample_set.plan.replicates, seed=seed)


# ============================================================
# oracle: 정확 분포 vs 전이행렬
# ============================================================
def suite_oracle(options: VerifyOptions) -> List[TestReport]:
    reports = []
    top = min(options.n or 8, BRUTE_FORCE_MAX_N)
    strict = SelectionRule.STRICT

    for n in range(1, top + 1):
        exact = oneflip_exact_pmf(n)
        brute = brute_force_pmf(ChainConfig(n, MutationKind.one_flip(), strict), t_max=exact.t_max)
        reports.append(TestReport.below(f"oracle_oneflip_tv[n={n}]", exact.total_variation(brute),
                                        TV_TOLERANCE, n=n))
        reports.append(TestReport.below(f"oracle_oneflip_tail[n={n}]", max(exact.tail, brute.tail),
                                        TAIL_TOLERANCE, n=n))
        reports.append(relative_error_report(f"oracle_oneflip_variance[n={n}]", brute.variance(),
                                             oneflip_moments(n).variance, 1e-8, n=n))

    for n in range(2, top + 1):
        for c in (0.5, 1.0, 2.0):
            if c > n:
                continue
            config = ChainConfig(n, MutationKind.bernoulli(c), strict)
            exact = bernoulli_exact_pmf(n, c)
            brute = brute_force_pmf(config, t_max=exact.t_max)
            label = f"n={n},c={c:g}"
            reports.append(TestReport.below(f"oracle_bernoulli_tv[{label}]",
                                            exact.total_variation(brute), TV_TOLERANCE, n=n))
            if c == n:
                # ε = 1: 레벨 ≥ 1 에서 진전 불가, 평균 ∞
                continue
            reports.append(relative_error_report(f"oracle_bernoulli_mean[{label}]",
                                                 brute_force_mean(config),
                                                 bernoulli_exact_mean(n, c),
                                                 MEAN_RELATIVE_TOLERANCE, n=n))
    return reports


# ============================================================
# lln: 평균, 확률수렴, 점프 확률, 성능 비교
# ============================================================
def suite_lln(options: VerifyOptions) -> List[TestReport]:
    reports = []
    seed = options.seed
    n_mc = options.n or 100
    replicates = options.replicates or 10_000
    mutations = (("oneflip", MutationKind.one_flip()), ("bernoulli", MutationKind.bernoulli(1.0)))

    for n in range(1, 51):
        reports.append(relative_error_report(f"oneflip_exact_mean[n={n}]",
                                             oneflip_exact_pmf(n).mean(), n * n / 2.0,
                                             MEAN_RELATIVE_TOLERANCE, n=n))

    # 확률수렴: Chebyshev 상한 Var/(δ² E²) 이 n 에 따라 0 으로
    bounds = [_chebyshev_bound(n, MutationKind.one_flip()) for n in (100, 1_000, 10_000)]
    reports.append(TestReport.below("oneflip_chebyshev_decreasing",
                                    float(np.max(np.diff(bounds))), 0.0,
                                    details={"bounds": bounds}))

    reports.append(relative_error_report("bernoulli_mean_ratio[n=100,c=1]",
                                         bernoulli_exact_mean(100, 1.0) / 100 ** 2, m_of_c(1.0),
                                         LLN_BERNOULLI_TOL_100, n=100))
    reports.append(relative_error_report("bernoulli_mean_ratio[n=1000,c=1]",
                                         bernoulli_exact_mean(1000, 1.0) / 1000 ** 2, m_of_c(1.0),
                                         LLN_BERNOULLI_TOL_1000, n=1000))
    reports.append(relative_error_report("bernoulli_pmf_mean[n=100,c=1]",
                                         bernoulli_exact_pmf(100, 1.0).mean(),
                                         bernoulli_exact_mean(100, 1.0),
                                         MEAN_RELATIVE_TOLERANCE, n=100))

    # T/E(T) → 1: 평균, Chebyshev 상한, n → 2n 에서 이탈 비율 감소
    for offset, (label, mutation) in enumerate(mutations):
        small = _simulate(ChainConfig(n_mc, mutation), replicates, seed + offset, options)
        reports.extend(_mean_reports(label, small, seed + offset))
        large = _simulate(ChainConfig(2 * n_mc, mutation), replicates, seed + 3 + offset, options)
        reports.append(_concentration_trend_report(label, small, large, seed + 3 + offset))

    for _, mutation in mutations:
        for rule in SelectionRule:
            reports.append(_jump_probability_report(8, 3, mutation, rule, 20_000, seed + 2))

    reports.extend(comparison_reports(100, DEFAULT_C_GRID))
    return reports


def _exact_moments(n: int, mutation: MutationKind):
    if mutation.is_bernoulli:
        return bernoulli_moments(n, mutation.c)
    return oneflip_moments(n)


def _chebyshev_bound(n: int, mutation: MutationKind) -> float:
    moments = _exact_moments(n, mutation)
    return min(1.0, moments.variance / (CONCENTRATION_DELTA * moments.mean) ** 2)


def _mean_reports(label: str, samples, seed: int) -> List[TestReport]:
    """Monte Carlo 평균 vs 정확 평균 (3 SE), 상한 없음, 이탈 비율 vs Chebyshev 상한"""
    config = samples.plan.config
    n, replicates = config.n, samples.plan.replicates
    times = samples.hitting_times()
    expected = _exact_moments(n, config.mutation).mean
    reports = [_no_capped_report(samples, f"{label}_no_capped", seed)]
    if times.size < 2:
        reports.append(TestReport.shortfall(f"{label}_mc_mean", times.size, 2,
                                            n=n, R=replicates, seed=seed))
        return reports

    summary = summarize(times)
    reports.append(TestReport.below(
        f"{label}_mc_mean", abs(summary.mean - expected), SE_MULTIPLIER * summary.std_error,
        n=n, R=replicates, seed=seed, details={"mean": summary.mean, "expected": expected}))
    reports.append(concentration_report(
        times, expected, CONCENTRATION_DELTA, _chebyshev_bound(n, config.mutation),
        test=f"{label}_concentration_vs_chebyshev", n=n, seed=seed))
    return reports


def _deviation_fraction(samples) -> float:
    """P(|T/E(T) - 1| > δ) 경험값"""
    config = samples.plan.config
    times = samples.hitting_times()
    expected = _exact_moments(config.n, config.mutation).mean
    return float(np.mean(np.abs(times / expected - 1.0) > CONCENTRATION_DELTA))


def _concentration_trend_report(label: str, small, large, seed: int) -> TestReport:
    """n 에서 2n 으로 갈 때 이탈 비율이 늘지 않는지"""
    test = f"{label}_concentration_trend"
    n_small, n_large = small.plan.config.n, large.plan.config.n
    replicates = large.plan.replicates
    sizes = min(small.hitting_times().size, large.hitting_times().size)
    if sizes == 0:
        return TestReport.shortfall(test, sizes, 1, n=n_large, R=replicates, seed=seed)

    fraction_small, fraction_large = _deviation_fraction(small), _deviation_fraction(large)
    return TestReport(
        test=test, statistic=fraction_large, threshold=fraction_small,
        passed=bool(fraction_large <= fraction_small), n=n_large, R=replicates, seed=seed,
        details={"n_small": n_small, "n_large": n_large, "delta": CONCENTRATION_DELTA})


def comparison_reports(n: int, c_grid) -> List[TestReport]:
    """m(c) > 1/2 와 유한 n 에서 Bernoulli 평균 > one-flip 평균"""
    grid = 0.01 * np.arange(1, 1001)
    m_values = np.array([m_of_c(c) for c in grid])
    reports = [TestReport.above("m_of_c_above_half", float(m_values.min()), 0.5,
                                details={"argmin_c": float(grid[m_values.argmin()])})]
    oneflip_mean = oneflip_moments(n).mean
    gaps = [bernoulli_exact_mean(n, c) - oneflip_mean for c in c_grid if c <= n]
    reports.append(TestReport.above(f"bernoulli_slower_than_oneflip[n={n}]", min(gaps), 0.0, n=n,
                                    details={"c_grid": list(c_grid)}))
    return reports


# ============================================================
# clt: Θ_n 의 정규 극한
# ============================================================
def _theta_reports(label: str, config: ChainConfig, replicates: int, seed: int,
                   limit_variance: float, var_tol: float, ks_threshold: float,
                   options: VerifyOptions):
    samples = _simulate(config, replicates, seed, options)
    theta = samples.theta_values()
    reports = [_no_capped_report(samples, f"{label}_no_capped", seed)]
    if theta.size < 2:
        for name in ("theta_variance", "theta_ks"):
            reports.append(TestReport.shortfall(f"{label}_{name}", theta.size, 2,
                                                n=config.n, R=replicates, seed=seed))
        return reports

    summary = summarize(theta)
    reports.append(relative_error_report(f"{label}_theta_variance", summary.variance,
                                         limit_variance, var_tol,
                                         n=config.n, R=replicates, seed=seed))
    reports.append(ks_one_sample(Ecdf.from_samples(theta), 0.0, limit_variance,
                                 threshold=ks_threshold, test=f"{label}_theta_ks",
                                 n=config.n, seed=seed))
    return reports


def trend_sizes(n: int) -> Tuple[int, int]:
    """KS 추세 비교용 서로 다른 두 크기 (n//2, 2n), 작은 n 에서도 구별됨"""
    small = max(n // 2, 2)
    return small, max(2 * n, small + 1)


def suite_clt(options: VerifyOptions) -> List[TestReport]:
    n = options.n or 200
    replicates = options.replicates or 20_000
    seed = options.seed

    reports = _theta_reports("oneflip", ChainConfig(n), replicates, seed, 0.75,
                             CLT_ONEFLIP_VAR_TOL, CLT_ONEFLIP_KS, options)

    # n 이 커질수록 KS 거리가 줄어드는지 (시드 고정 한 쌍)
    small, large = trend_sizes(n)
    distances = {}
    for size in (small, large):
        theta = _simulate(ChainConfig(size), replicates, seed + size, options).theta_values()
        if theta.size:
            distances[size] = ks_one_sample(Ecdf.from_samples(theta), 0.0, 0.75).statistic
    if len(distances) < 2:
        reports.append(TestReport.shortfall("oneflip_ks_trend", len(distances), 2,
                                            R=replicates, seed=seed))
    else:
        reports.append(TestReport(
            test="oneflip_ks_trend", statistic=distances[large], threshold=distances[small],
            passed=bool(distances[large] <= distances[small]), R=replicates, seed=seed,
            details={"n_small": small, "n_large": large}))

    c = 1.0
    reports.extend(_theta_reports("bernoulli", ChainConfig(n, MutationKind.bernoulli(c)),
                                  replicates, seed + 1, sigma2_of_c(c), CLT_BERNOULLI_VAR_TOL,
                                  CLT_BERNOULLI_KS, options))
    return reports


# ============================================================
# equivalence: 엄격 vs 비엄격 규칙 동일 분포
# ============================================================
def suite_equivalence(options: VerifyOptions) -> List[TestReport]:
    reports = []
    exact_top = min(options.n or 6, BRUTE_FORCE_MAX_N)
    mutations = (MutationKind.one_flip(), MutationKind.bernoulli(1.0))

    for n in range(1, exact_top + 1):
        for mutation in mutations:
            horizon = default_horizon(n, mutation)
            strict = brute_force_pmf(ChainConfig(n, mutation, SelectionRule.STRICT), horizon)
            loose = brute_force_pmf(ChainConfig(n, mutation, SelectionRule.NON_STRICT), horizon)
            reports.append(TestReport.below(f"equivalence_exact[n={n},{mutation.label()}]",
                                            strict.total_variation(loose), TV_TOLERANCE, n=n))

    n_stat = options.n or 50
    replicates = options.replicates or 10_000
    for offset, mutation in enumerate(mutations):
        seed_a = options.seed + 2 * offset
        seed_b = seed_a + 1
        a = _simulate(ChainConfig(n_stat, mutation, SelectionRule.STRICT), replicates, seed_a, options)
        b = _simulate(ChainConfig(n_stat, mutation, SelectionRule.NON_STRICT), replicates, seed_b,
                      options)
        reports.append(ks_two_sample(Ecdf.from_samples(a.hitting_times()),
                                     Ecdf.from_samples(b.hitting_times()),
                                     test=f"equivalence_ks[{mutation.label()}]",
                                     n=n_stat, seed=seed_a))
    return reports


# ============================================================
# lemmas: 접미사 균등성, 레벨 전이, ℓ₀ 분포, 조건부 음이항
# ============================================================
def suite_lemmas(options: VerifyOptions) -> List[TestReport]:
    reports = []
    seed = options.seed
    draws = options.replicates or 100_000
    n, c = 5, 1.0

    # 기각 경로는 체인을 두 규칙으로 실제 실행, direct 는 빠른 경로 교차 확인
    variants = [(f"rejection,{rule.value}", False, rule) for rule in SelectionRule]
    variants.append(("direct", True, SelectionRule.STRICT))
    for name, direct, rule in variants:
        table = collect_suffix_samples(n, c, 1, draws, master_seed=seed, direct=direct, rule=rule)
        cells = len(table.counts)
        reports.append(TestReport.below(f"suffix_complete[{name}]", table.requested - table.obtained,
                                        1, n=n, R=draws, seed=seed))
        reports.append(chi_square_merged(table.counts, np.full(cells, 1.0 / cells),
                                         test=f"suffix_uniform[{name}]", n=n, seed=seed))

    for rule in SelectionRule:
        table = collect_level_transitions(n, c, 0, draws, master_seed=seed + 1, rule=rule)
        reports.append(chi_square_merged(table.counts, expected_level_probs(n, 0),
                                         test=f"level_transition_law[i=0,{rule.value}]",
                                         n=n, seed=seed + 1))

    reports.append(_initial_level_report(10, draws, seed + 2))
    reports.append(_conditional_negbin_report(6, 3, options.replicates or 20_000, seed + 3, options))
    return reports


def _initial_level_report(n: int, draws: int, seed: int) -> TestReport:
    """균등 X₀ 에서 P(ℓ₀ = i) = 2^{-(i+1)} (i < n), P(ℓ₀ = n) = 2^{-n}"""
    rng = np.random.default_rng(seed)
    levels = leading_ones_rows(rng.integers(0, 2, size=(draws, n), dtype=np.uint8))
    observed = np.bincount(levels, minlength=n + 1)
    expected = np.array([2.0 ** -(i + 1) for i in range(n)] + [2.0 ** -n])
    return chi_square_merged(observed, expected, test="initial_level_law", n=n, seed=seed)


def _conditional_negbin_report(n: int, zeros: int, replicates: int, seed: int,
                               options: VerifyOptions) -> TestReport:
    """One-flip 엄격 규칙: |X₀| = n - k 조건부로 T ~ 𝒩ℬ(k, 1/n)"""
    test = f"conditional_negbin[k={zeros}]"
    samples = _simulate(ChainConfig(n), replicates, seed, options)
    times = np.array([r.hitting_time for r in samples.records
                      if r.initial_zeros == zeros and not r.capped], dtype=np.int64)
    if times.size == 0:
        return TestReport.shortfall(test, 0, 1, n=n, R=replicates, seed=seed,
                                    details={"records": 0})

    horizon = int(times.max()) + 1
    probs = np.array([negbin_pmf(zeros, 1.0 / n, t) for t in range(horizon)])
    probs = np.append(probs, max(0.0, 1.0 - probs.sum()))
    observed = np.bincount(times, minlength=horizon + 1).astype(float)
    return chi_square_merged(observed, probs / probs.sum(), test=test,
                             n=n, seed=seed, details={"records": int(times.size)})


def _jump_probability_report(n: int, level: int, mutation: MutationKind, rule: SelectionRule,
                             trials: int, seed: int) -> TestReport:
    """레벨 i 상태에서 한 스텝 뒤 레벨이 증가하는 빈도 vs 1/n 또는 ε(1-ε)^i"""
    rng = np.random.default_rng(seed)
    config = ChainConfig(n, mutation, rule)
    parent = ChainState(BitString((1,) * level + (0,) * (n - level)))
    jumps = sum(1 for _ in range(trials) if step(parent, config, rng).level > level)
    q = mutation.jump_probability(n, level)
    return chi_square_merged([jumps, trials - jumps], [q, 1.0 - q],
                             test=f"jump_probability[{mutation.label()},{rule.value}]",
                             n=n, R=trials, seed=seed)


SUITE_FUNCTIONS: Dict[str, Callable[[VerifyOptions], List[TestReport]]] = {
    "oracle": suite_oracle,
    "lln": suite_lln,
    "clt": suite_clt,
    "equivalence": suite_equivalence,
    "lemmas": suite_lemmas,
}


def run_suite(name: str, options: VerifyOptions) -> SuiteResult:
    """이름으로 스위트 실행 ('all' 은 전부 이어서)"""
    if name != "all" and name not in SUITE_FUNCTIONS:
        raise ConfigError(f"알 수 없는 스위트: {name}")

    start = time.perf_counter()
    result = SuiteResult(suite=name)
    for suite in (SUITES if name == "all" else (name,)):
        logger.info("스위트 시작: %s", suite)
        result.reports.extend(SUITE_FUNCTIONS[suite](options))
        logger.info("스위트 종료: %s", suite)
    result.runtime_ms = (time.perf_counter() - start) * 1000.0
    return result
