"""
통계 검정 모듈
표본 모멘트, 경험 분포함수, 정규 CDF, Kolmogorov–Smirnov, 카이제곱 적합도
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special, stats

from config import CHI2_MIN_EXPECTED, CHI2_QUANTILE, KS_ALPHA


@dataclass(frozen=True)
class SummaryStats:
    """표본 평균/분산 (불편), 평균의 표준오차, 선택적으로 Θ 의 평균/분산"""

    count: int
    mean: float
    variance: float
    std_error: float
    theta_mean: Optional[float] = None
    theta_variance: Optional[float] = None

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True, eq=False)
class Ecdf:
    """정렬된 표본값"""

    values: np.ndarray

    def __post_init__(self):
        values = np.sort(np.asarray(self.values, dtype=float).ravel())
        if values.size < 1:
            raise ValueError("ECDF 에는 표본이 1개 이상 필요합니다")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_samples(cls, samples) -> "Ecdf":
        return cls(np.asarray(samples))

    @property
    def count(self) -> int:
        return int(self.values.size)

    def __call__(self, z):
        return np.searchsorted(self.values, z, side="right") / self.count


@dataclass
class TestReport:
    """검정 결과 한 건 (JSON: test, statistic, threshold, alpha, pass, n, R, seed)"""

    __test__ = False  # pytest 수집 제외

    test: str
    statistic: float
    threshold: float
    passed: bool
    alpha: Optional[float] = None
    n: Optional[int] = None
    R: Optional[int] = None
    seed: Optional[int] = None
    details: dict = field(default_factory=dict)

    @classmethod
    def below(cls, test: str, statistic: float, threshold: float, **meta) -> "TestReport":
        """statistic < threshold 이면 통과 (NaN 은 실패)"""
        statistic = float(statistic)
        passed = bool(statistic < threshold) if not math.isnan(statistic) else False
        return cls(test=test, statistic=statistic, threshold=float(threshold), passed=passed, **meta)

    @classmethod
    def above(cls, test: str, statistic: float, threshold: float, **meta) -> "TestReport":
        statistic = float(statistic)
        passed = bool(statistic > threshold) if not math.isnan(statistic) else False
        return cls(test=test, statistic=statistic, threshold=float(threshold), passed=passed, **meta)

    @classmethod
    def shortfall(cls, test: str, obtained: int, needed: int, **meta) -> "TestReport":
        """표본 부족: 예외 대신 실패로 기록"""
        meta.setdefault("details", {}).update(reason="insufficient samples")
        return cls(test=test, statistic=float(obtained), threshold=float(needed), passed=False,
                   **meta)

    def to_dict(self) -> dict:
        data = {
            "test": self.test,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "alpha": self.alpha,
            "pass": self.passed,
            "n": self.n,
            "R": self.R,
            "seed": self.seed,
        }
        if self.details:
            data["details"] = self.details
        return data


# ============================================================
# 모멘트
# ============================================================
def summarize(samples, n: int = None, mutation=None) -> SummaryStats:
    """
    불편 표본 평균/분산과 표준오차 sd/√count
    n, mutation 을 주면 Θ 통계량의 평균/분산도 계산
    """
    values = np.asarray(samples, dtype=float).ravel()
    if values.size < 2:
        raise ValueError(f"표본이 2개 이상 필요합니다: {values.size}")

    variance = float(np.var(values, ddof=1))
    theta_mean = theta_variance = None
    if n is not None and mutation is not None:
        from exact_engine import theta_statistic

        theta = theta_statistic(values, n, mutation)
        theta_mean = float(theta.mean())
        theta_variance = float(np.var(theta, ddof=1))

    return SummaryStats(
        count=int(values.size),
        mean=float(values.mean()),
        variance=variance,
        std_error=math.sqrt(variance / values.size),
        theta_mean=theta_mean,
        theta_variance=theta_variance,
    )


def normal_cdf(z):
    """표준 정규 CDF Φ(z) (scipy.special.ndtr, 오차 ~1e-16)"""
    result = special.ndtr(z)
    return float(result) if np.ndim(result) == 0 else result


# ============================================================
# Kolmogorov–Smirnov
# ============================================================
def ks_asymptotic_constant(alpha: float) -> float:
    """c(α) = √(-ln(α/2) / 2), α=0.01 → 1.628"""
    return math.sqrt(-math.log(alpha / 2.0) / 2.0)


def ks_one_sample(ecdf: Ecdf, mean: float, variance: float, threshold: float = None,
                  test: str = "ks_one_sample", **meta) -> TestReport:
    """
    sup_z |ECDF(z) - Φ((z - mean)/√variance)| (양쪽 한쪽 간격 모두)
    threshold 기본값: 점근 1% 분위수 1.63/√R
    """
    if variance <= 0:
        raise ValueError(f"분산은 양수여야 합니다: {variance}")
    statistic = stats.kstest(ecdf.values, "norm", args=(mean, math.sqrt(variance))).statistic
    if threshold is None:
        threshold = ks_asymptotic_constant(KS_ALPHA) / math.sqrt(ecdf.count)
    meta.setdefault("R", ecdf.count)
    return TestReport.below(test, statistic, threshold, **meta)


def ks_two_sample(a: Ecdf, b: Ecdf, alpha: float = KS_ALPHA,
                  test: str = "ks_two_sample", **meta) -> TestReport:
    """두 ECDF 의 sup 거리, 임계값 c(α)·√((m+n)/(mn))"""
    statistic = stats.ks_2samp(a.values, b.values).statistic
    m, k = a.count, b.count
    threshold = ks_asymptotic_constant(alpha) * math.sqrt((m + k) / (m * k))
    meta.setdefault("R", m)
    details = dict(meta.pop("details", {}), sizes=[m, k])
    return TestReport.below(test, statistic, threshold, alpha=alpha, details=details, **meta)


# ============================================================
# 카이제곱 적합도
# ============================================================
def chi_square_gof(observed, expected, quantile: float = CHI2_QUANTILE,
                   test: str = "chi_square_gof", **meta) -> TestReport:
    """
    Pearson 카이제곱, 자유도 = 칸 수 - 1
    모든 기대 빈도가 CHI2_MIN_EXPECTED 이상이어야 함 (부족하면 merge_sparse_cells 로 병합)
    """
    observed = np.asarray(observed, dtype=float).ravel()
    probs = np.asarray(expected, dtype=float).ravel()
    if observed.shape != probs.shape:
        raise ValueError("observed 와 expected 의 칸 수가 다릅니다")
    if abs(probs.sum() - 1.0) > 1e-9 or np.any(probs < 0):
        raise ValueError(f"기대 확률의 합이 1 이 아닙니다: {probs.sum()!r}")

    total = observed.sum()
    expected_counts = probs * total
    if np.any(expected_counts < CHI2_MIN_EXPECTED):
        raise ValueError(f"기대 빈도 {expected_counts.min():.3g} < {CHI2_MIN_EXPECTED}: 칸을 병합하세요")

    meta.setdefault("R", int(total))
    alpha = 1.0 - quantile
    if observed.size == 1:
        return TestReport(test=test, statistic=0.0, threshold=0.0, passed=True, alpha=alpha, **meta)

    statistic = stats.chisquare(observed, expected_counts).statistic
    threshold = stats.chi2.ppf(quantile, observed.size - 1)
    return TestReport.below(test, statistic, threshold, alpha=alpha, **meta)


def merge_sparse_cells(observed, expected, min_expected: float = CHI2_MIN_EXPECTED):
    """
    기대 빈도가 min_expected 이상이 되도록 인접 칸을 왼쪽부터 병합
    마지막 남은 칸들은 직전 그룹에 합침
    """
    observed = np.asarray(observed, dtype=float).ravel()
    probs = np.asarray(expected, dtype=float).ravel()
    total = observed.sum()

    merged_obs, merged_probs = [], []
    acc_obs = acc_prob = 0.0
    for o, p in zip(observed, probs):
        acc_obs += o
        acc_prob += p
        if acc_prob * total >= min_expected:
            merged_obs.append(acc_obs)
            merged_probs.append(acc_prob)
            acc_obs = acc_prob = 0.0
    if acc_prob > 0.0 or acc_obs > 0.0:
        if merged_obs:
            merged_obs[-1] += acc_obs
            merged_probs[-1] += acc_prob
        else:
            merged_obs.append(acc_obs)
            merged_probs.append(acc_prob)
    return np.array(merged_obs), np.array(merged_probs)


def chi_square_merged(observed, expected, test: str = "chi_square_gof", **meta) -> TestReport:
    """
    희소 칸 병합 후 chi_square_gof
    병합 뒤 칸이 2개 미만이면 (표본 부족) 실패 보고서
    """
    observed, probs = merge_sparse_cells(observed, expected)
    if observed.size < 2:
        return TestReport.shortfall(test, int(observed.sum()), 2 * int(CHI2_MIN_EXPECTED), **meta)
    return chi_square_gof(observed, probs / probs.sum(), test=test, **meta)


# ============================================================
# 기타 보고서
# ============================================================
def relative_error_report(test: str, value: float, reference: float, tolerance: float,
                          **meta) -> TestReport:
    """|value/reference - 1| < tolerance"""
    error = abs(value / reference - 1.0) if reference != 0 else abs(value)
    meta.setdefault("details", {}).update(value=value, reference=reference)
    return TestReport.below(test, error, tolerance, **meta)


def concentration_report(samples, expected_mean: float, delta: float, bound: float,
                         test: str = "concentration", **meta) -> TestReport:
    """P(|T/E(T) - 1| > δ) 의 경험값이 bound 미만인지 확인"""
    values = np.asarray(samples, dtype=float)
    fraction = float(np.mean(np.abs(values / expected_mean - 1.0) > delta))
    meta.setdefault("R", int(values.size))
    meta.setdefault("details", {}).update(delta=delta)
    return TestReport.below(test, fraction, bound, **meta)


if __name__ == "__main__":
    print("=" * 60)
    print("📊 통계 검정 테스트")
    print("=" * 60)

    rng = np.random.default_rng(1)
    sample = rng.normal(0.0, 1.0, 10_000)
    report = ks_one_sample(Ecdf.from_samples(sample), 0.0, 1.0)
    print(f"  KS (정규 자기검정): D={report.statistic:.4f} < {report.threshold:.4f} → {report.passed}")

    counts = np.bincount(rng.integers(0, 8, 100_000), minlength=8)
    report = chi_square_gof(counts, np.full(8, 1 / 8))
    print(f"  χ² (균등 8칸): {report.statistic:.2f} < {report.threshold:.2f} → {report.passed}")
    print(f"  Φ(1.959964) = {normal_cdf(1.959964):.7f}")
