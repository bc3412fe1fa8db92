"""
정확 분포 엔진
적중시간 T 의 정확한 분포와 모멘트, 점근 계수, 전이행렬 오라클

- One-flip: |X₀| 조건부 음이항 분포를 이항(n, 1/2) 로 혼합
- Bernoulli-flip: 레벨 i 마다 독립 동전 B_i 와 기하 G_i(p(n,i)) 의 합 Σ B_i·G_i
- 오라클: 2ⁿ 상태 전이행렬로 체인 정의를 그대로 계산
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import linalg, sparse, stats
from scipy.optimize import minimize_scalar
from scipy.signal import lfilter

from chain import ChainConfig, MutationKind, leading_ones_rows
from config import (
    BRUTE_FORCE_MAX_N, EXACT_BERNOULLI_MAX_N, EXACT_ONEFLIP_MAX_N,
    PMF_SUM_TOLERANCE, TAIL_TOLERANCE, ConfigError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Pmf:
    """
    t = 0..t_max 의 질량 벡터와 잘린 꼬리 질량
    꼬리는 재정규화하지 않고 항상 명시적으로 보관
    """

    mass: np.ndarray
    tail: float

    def __post_init__(self):
        mass = np.array(self.mass, dtype=float)
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)
        # 1 - sum 의 반올림 오차로 생기는 -1e-17 수준 값 제거
        object.__setattr__(self, "tail", max(0.0, float(self.tail)))

    @property
    def t_max(self) -> int:
        return self.mass.size - 1

    def validate(self, tol: float = PMF_SUM_TOLERANCE):
        if np.any(self.mass < 0):
            raise ValueError("음수 질량")
        total = self.mass.sum() + self.tail
        if abs(total - 1.0) > tol:
            raise ValueError(f"sum(mass) + tail = {total!r} ≠ 1")
        return self

    def mean(self) -> float:
        """잘린 평균 Σ t·mass(t) (꼬리 질량이 TAIL_TOLERANCE 이하일 때 사실상 정확)"""
        return float(np.dot(np.arange(self.mass.size), self.mass))

    def variance(self) -> float:
        t = np.arange(self.mass.size)
        total = self.mass.sum()
        mu = np.dot(t, self.mass) / total
        return float(np.dot((t - mu) ** 2, self.mass) / total)

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.mass)

    def truncate(self, t_max: int) -> "Pmf":
        """t_max 이후 질량을 꼬리로 접음"""
        if t_max >= self.t_max:
            return self
        return Pmf(self.mass[: t_max + 1], self.tail + self.mass[t_max + 1:].sum())

    def total_variation(self, other: "Pmf") -> float:
        """공통 구간으로 자른 두 분포의 총변동거리 (꼬리는 한 칸으로 취급)"""
        horizon = min(self.t_max, other.t_max)
        a, b = self.truncate(horizon), other.truncate(horizon)
        return 0.5 * (float(np.abs(a.mass - b.mass).sum()) + abs(a.tail - b.tail))


@dataclass(frozen=True)
class LevelLaw:
    """점프 시 레벨 전이 확률 P(ℓ_k = j | ℓ_{k-1} = i), 0 ≤ i < j ≤ n"""

    n: int
    probs: Dict[Tuple[int, int], float]

    def row(self, i: int) -> Dict[int, float]:
        return {j: self.probs[(i, j)] for j in range(i + 1, self.n + 1)}

    def row_vector(self, i: int) -> np.ndarray:
        """j = i+1..n 순서의 확률 벡터"""
        return np.array([self.probs[(i, j)] for j in range(i + 1, self.n + 1)])


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float
    n: int
    mutation: MutationKind

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


# ============================================================
# 기본 분포
# ============================================================
def _check_probability(p: float):
    if not 0.0 < p <= 1.0:
        raise ValueError(f"확률 p 는 (0, 1] 범위여야 합니다: {p}")


def geometric_pmf(p: float, t: int) -> float:
    """𝒢(p): P(G = t) = p(1-p)^{t-1}, t ≥ 1"""
    _check_probability(p)
    if t < 1:
        return 0.0
    return p * (1.0 - p) ** (t - 1)


def negbin_pmf(k0: int, p: float, t: int) -> float:
    """
    기하분포 k0 개 합의 질량 (t-1 choose t-k0) p^k0 (1-p)^(t-k0)
    k0 = 0 은 빈 합, 즉 t = 0 의 점질량
    """
    _check_probability(p)
    if k0 < 0:
        raise ValueError(f"k0 는 0 이상이어야 합니다: {k0}")
    if k0 == 0:
        return 1.0 if t == 0 else 0.0
    if t < k0:
        return 0.0
    if p == 1.0:
        return 1.0 if t == k0 else 0.0
    # scipy 의 nbinom 은 실패 횟수 t - k0 의 분포
    return float(stats.nbinom.pmf(t - k0, k0, p))


def default_horizon(n: int, mutation: MutationKind, tol: float = TAIL_TOLERANCE) -> int:
    """
    꼬리 질량이 tol 이하가 되는 t_max
    각 레벨의 체류시간은 𝒢(p_min) 에 확률적으로 지배되므로 T ≤_st 𝒩ℬ(levels, p_min)
    """
    probs = [mutation.jump_probability(n, i) for i in range(n)]
    positive = [p for p in probs if p > 0.0]
    if not positive:
        return 0
    levels = len(positive)
    p_min = min(positive)
    if p_min >= 1.0:
        return levels

    failures = stats.nbinom.isf(tol, levels, p_min)
    if not np.isfinite(failures):
        mean = levels * (1.0 - p_min) / p_min
        failures = mean + 40.0 * math.sqrt(levels * (1.0 - p_min)) / p_min
    failures = int(failures)
    step = max(1, int(math.sqrt(levels * (1.0 - p_min)) / p_min))
    while stats.nbinom.sf(failures, levels, p_min) > tol:
        failures += step
    horizon = failures + levels
    logger.debug("horizon n=%d %s → t_max=%d", n, mutation.label(), horizon)
    return horizon


# ============================================================
# One-flip 정확 분포
# ============================================================
def _check_limit(n: int, limit: int, what: str):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ConfigError(f"n 은 양의 정수여야 합니다: {n}")
    if n > limit:
        raise ConfigError(f"{what}: n={n} 은 엔진 한계 {limit} 를 넘습니다")


def oneflip_exact_pmf(n: int, t_max: Optional[int] = None) -> Pmf:
    """
    mass(t) = 2⁻ⁿ Σ_k (n choose k) 𝒩ℬ(k, 1/n)(t)
    k = X₀ 의 0 의 개수, 조건부로 0 하나당 𝒢(1/n) 대기
    """
    _check_limit(n, EXACT_ONEFLIP_MAX_N, "one-flip 정확 분포")
    if t_max is None:
        t_max = default_horizon(n, MutationKind.one_flip())
    if t_max < 0:
        raise ConfigError(f"t_max 는 0 이상이어야 합니다: {t_max}")

    t = np.arange(t_max + 1)
    weights = stats.binom.pmf(np.arange(n + 1), n, 0.5)
    k = np.arange(1, n + 1)[:, None]
    if n == 1:
        conditional = (t[None, :] == k).astype(float)
    else:
        conditional = stats.nbinom.pmf(t[None, :] - k, k, 1.0 / n)

    mass = weights[1:] @ conditional
    mass[0] += weights[0]
    return Pmf(mass, 1.0 - mass.sum())


def oneflip_moments(n: int) -> MomentSummary:
    """
    E(T) = n²/2
    Var(T) = E[Var(T|k)] + Var(E[T|k]) = (n/2)(n² - n) + n³/4 = 3n³/4 - n²/2
    """
    if n < 1:
        raise ConfigError(f"n 은 1 이상이어야 합니다: {n}")
    return MomentSummary(
        mean=n * n / 2.0,
        variance=0.75 * n ** 3 - 0.5 * n ** 2,
        n=n,
        mutation=MutationKind.one_flip(),
    )


def oneflip_laplace_transform(n: int, s: float) -> float:
    """E[e^{-sT}] = 2⁻ⁿ (1 + g(s))ⁿ, g 는 𝒢(1/n) 의 라플라스 변환"""
    return _laplace_product([1.0 / n] * n, s)


# ============================================================
# Bernoulli-flip 정확 분포
# ============================================================
def level_transition_law(n: int) -> LevelLaw:
    """
    i < j < n: 2^{-(j-i)}
    j = n:     2^{-(n-i-1)}
    """
    if n < 1:
        raise ConfigError(f"n 은 1 이상이어야 합니다: {n}")
    probs = {}
    for i in range(n):
        for j in range(i + 1, n):
            probs[(i, j)] = 2.0 ** -(j - i)
        probs[(i, n)] = 2.0 ** -(n - i - 1)
    return LevelLaw(n=n, probs=probs)


def _bernoulli_mutation(n: int, c: float) -> MutationKind:
    mutation = MutationKind.bernoulli(c)
    mutation.validate_for(n)
    return mutation


def bernoulli_exact_pmf(n: int, c: float, t_max: Optional[int] = None) -> Pmf:
    """
    Σ_{i<n} B_i·G_i 의 분포 (B_i ~ 공정한 동전, G_i ~ 𝒢(p(n,i)))
    레벨마다 (1/2)δ₀ + (1/2)𝒢(p) 를 순차적으로 합성곱
    증가하는 레벨 수열 ↔ {0..n-1} 의 부분집합 (각 확률 2⁻ⁿ) 이므로 레벨 합 공식과 동일
    """
    _check_limit(n, EXACT_BERNOULLI_MAX_N, "Bernoulli 정확 분포")
    mutation = _bernoulli_mutation(n, c)
    if t_max is None:
        t_max = default_horizon(n, mutation)
    if t_max < 0:
        raise ConfigError(f"t_max 는 0 이상이어야 합니다: {t_max}")

    mass = np.zeros(t_max + 1)
    mass[0] = 1.0
    for i in range(n):
        p = mutation.jump_probability(n, i)
        # f_{X+G}(t) = (1-p) f_{X+G}(t-1) + p f_X(t-1); p = 0 이면 G = ∞ (꼬리로)
        shifted = lfilter([0.0, p], [1.0, -(1.0 - p)], mass)
        mass = 0.5 * mass + 0.5 * shifted
    return Pmf(mass, 1.0 - mass.sum())


def bernoulli_exact_mean(n: int, c: float) -> float:
    """
    E(T) = (1/2) Σ_i 1/p(n,i) = (n/2c) ((1-ε)^{-n} - 1) / ((1-ε)^{-1} - 1)
    c = n 은 직접 합산 (n ≥ 2 이면 ∞)
    """
    mutation = _bernoulli_mutation(n, c)
    eps = c / n
    if c < n:
        # (1-ε)^{-n} - 1 과 (1-ε)^{-1} - 1 을 상쇄 오차 없이 계산
        try:
            numerator = math.expm1(-n * math.log1p(-eps))
        except OverflowError:
            return math.inf
        denominator = eps / (1.0 - eps)
        return n / (2.0 * c) * numerator / denominator
    return 0.5 * sum(_inverse(mutation.jump_probability(n, i)) for i in range(n))


def _inverse(p: float) -> float:
    return math.inf if p == 0.0 else 1.0 / p


def bernoulli_moments(n: int, c: float) -> MomentSummary:
    """Var(B·G) = (3 - 2p) / (4p²) 를 레벨마다 합산"""
    mutation = _bernoulli_mutation(n, c)
    variance = 0.0
    for i in range(n):
        p = mutation.jump_probability(n, i)
        if p == 0.0:
            variance = math.inf
            break
        variance += (3.0 - 2.0 * p) / (4.0 * p * p)
    return MomentSummary(mean=bernoulli_exact_mean(n, c), variance=variance, n=n, mutation=mutation)


def bernoulli_laplace_transform(n: int, c: float, s: float) -> float:
    """E[e^{-sT}] = 2⁻ⁿ ∏_k (1 + g_k(s)), g_k 는 𝒢(p(n,k)) 의 변환"""
    mutation = _bernoulli_mutation(n, c)
    return _laplace_product([mutation.jump_probability(n, i) for i in range(n)], s)


def _laplace_product(probs, s: float) -> float:
    z = math.exp(-s)
    value = 1.0
    for p in probs:
        phi = p * z / (1.0 - (1.0 - p) * z) if p > 0.0 else 0.0
        value *= 0.5 * (1.0 + phi)
    return value


# ============================================================
# 점근 계수
# ============================================================
def m_of_c(c: float) -> float:
    """m(c) = (e^c - 1) / (2c²)"""
    if c <= 0:
        raise ValueError(f"c 는 양수여야 합니다: {c}")
    return math.expm1(c) / (2.0 * c * c)


def sigma2_of_c(c: float) -> float:
    """σ²(c) = 3(e^{2c} - 1) / (8c³)"""
    if c <= 0:
        raise ValueError(f"c 는 양수여야 합니다: {c}")
    return 3.0 * math.expm1(2.0 * c) / (8.0 * c ** 3)


def m_of_c_minimum() -> Tuple[float, float]:
    """m(c) 의 최소점 (c*, m(c*)) ≈ (1.594, 0.7717)"""
    result = minimize_scalar(m_of_c, bounds=(0.05, 10.0), method="bounded",
                             options={"xatol": 1e-8})
    return float(result.x), float(result.fun)


def theta_statistic(t, n: int, mutation: MutationKind):
    """
    Θ = (T - 중심) / n^{3/2}
    중심: one-flip n²/2, Bernoulli m(c)·n²
    """
    if n < 1:
        raise ConfigError(f"n 은 1 이상이어야 합니다: {n}")
    if mutation.is_bernoulli:
        center = m_of_c(mutation.c) * n * n
    else:
        center = n * n / 2.0
    theta = (np.asarray(t, dtype=float) - center) / n ** 1.5
    return float(theta) if theta.ndim == 0 else theta


# ============================================================
# 전이행렬 오라클
# ============================================================
def state_levels(n: int) -> np.ndarray:
    """상태 인덱스 s 의 LeadingOnes (1번 비트 = 최상위 비트)"""
    return leading_ones_rows(state_bits(n))


def state_bits(n: int) -> np.ndarray:
    states = np.arange(1 << n)
    shifts = n - 1 - np.arange(n)
    return ((states[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def transition_matrix(config: ChainConfig) -> np.ndarray:
    """
    2ⁿ × 2ⁿ 한 스텝 전이행렬
    one-flip: n 개 단일 비트 마스크 (각 1/n)
    bernoulli: 2ⁿ 개 마스크 (ε^|m| (1-ε)^{n-|m|})
    """
    n = config.n
    if n > BRUTE_FORCE_MAX_N:
        raise ConfigError(f"전이행렬 오라클: n={n} 은 한계 {BRUTE_FORCE_MAX_N} 를 넘습니다")

    size = 1 << n
    states = np.arange(size)
    levels = state_levels(n)

    if config.mutation.is_bernoulli:
        eps = config.mutation.epsilon(n)
        masks = states
        flips = state_bits(n).sum(axis=1)
        probs = eps ** flips * (1.0 - eps) ** (n - flips)
    else:
        masks = 1 << np.arange(n)
        probs = np.full(n, 1.0 / n)

    matrix = np.zeros((size, size))
    for mask, prob in zip(masks, probs):
        if prob == 0.0:
            continue
        candidates = states ^ mask
        accepted = config.selection.accepts(levels[candidates], levels)
        # 마스크가 고정되면 s → s^mask 는 순열이므로 인덱스 중복 없음
        matrix[states[accepted], candidates[accepted]] += prob
        matrix[states[~accepted], states[~accepted]] += prob
    return matrix


def brute_force_pmf(config: ChainConfig, t_max: Optional[int] = None) -> Pmf:
    """
    균등 초기 분포에서 all-ones 상태에 정확히 t 스텝에 흡수되는 확률
    엄격/비엄격 규칙 모두 지원
    """
    matrix = transition_matrix(config)
    if t_max is None:
        t_max = default_horizon(config.n, config.mutation)

    size = matrix.shape[0]
    transient = matrix[:-1, :-1]
    absorb = matrix[:-1, -1]
    if not config.mutation.is_bernoulli:
        transient = sparse.csr_matrix(transient)
    step_t = transient.T

    mass = np.zeros(t_max + 1)
    mass[0] = 1.0 / size
    v = np.full(size - 1, 1.0 / size)
    for t in range(1, t_max + 1):
        mass[t] = v @ absorb
        v = step_t @ v
    return Pmf(mass, float(v.sum()))


def brute_force_mean(config: ChainConfig) -> float:
    """
    평균 첫 통과시간 (I - Q) m = 1 을 풀어 균등 초기 분포로 평균
    흡수가 확실하지 않은 체인 (ε = 1, n ≥ 2) 은 거부
    """
    n = config.n
    if any(config.mutation.jump_probability(n, i) == 0.0 for i in range(n)):
        raise ConfigError("흡수가 확실하지 않은 체인입니다 (평균 = ∞)")
    matrix = transition_matrix(config)
    size = matrix.shape[0]
    transient = matrix[:-1, :-1]
    first_passage = linalg.solve(np.eye(size - 1) - transient, np.ones(size - 1))
    return float(first_passage.sum() / size)


if __name__ == "__main__":
    print("=" * 60)
    print("📐 정확 분포 엔진 테스트")
    print("=" * 60)

    for n in [1, 4, 10]:
        pmf = oneflip_exact_pmf(n)
        moments = oneflip_moments(n)
        print(f"  one-flip n={n}: mean={pmf.mean():.6f} (n²/2={moments.mean}), "
              f"var={pmf.variance():.6f} (정확 {moments.variance}), tail={pmf.tail:.1e}")

    for n, c in [(2, 1.0), (8, 0.5), (100, 1.0)]:
        pmf = bernoulli_exact_pmf(n, c)
        print(f"  bernoulli n={n}, c={c}: mean={pmf.mean():.6f} "
              f"(닫힌 형태 {bernoulli_exact_mean(n, c):.6f})")

    c_star, m_star = m_of_c_minimum()
    print(f"\n  m(c) 최소: c*={c_star:.4f}, m(c*)={m_star:.4f}")
    print(f"  m(1)={m_of_c(1.0):.6f}, σ²(1)={sigma2_of_c(1.0):.6f}")
