"""
LeadingOnes 체인 모듈
비트 문자열, 에너지(해밀토니안), 변이 연산자, 선택 규칙,
(1+1)-EA (엄격 규칙) 와 0온도 Metropolis (비엄격 규칙) 의 한 스텝 / 최적해 도달 반복
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from config import ConfigError, DEFAULT_ENGINE, default_max_iters

logger = logging.getLogger(__name__)

UNIFORM = "uniform"
ENGINES = ("jump", "step")


class BitStringError(ConfigError):
    """비트 문자열 형식 오류"""


@dataclass(frozen=True)
class BitString:
    """
    고정 길이 이진 벡터 x ∈ {0,1}ⁿ
    bits[0] 이 문서상 1번 비트 (가장 왼쪽)
    """

    bits: Tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits:
            raise BitStringError("비트 문자열 길이는 1 이상이어야 합니다")
        if any(b not in (0, 1) for b in bits):
            raise BitStringError(f"비트는 0 또는 1 이어야 합니다: {self.bits}")
        object.__setattr__(self, "bits", bits)

    @property
    def n(self) -> int:
        return len(self.bits)

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return self.to_text()

    @classmethod
    def from_text(cls, text: str) -> "BitString":
        """'1101' → (1,1,0,1), 첫 글자가 1번 비트"""
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise BitStringError(f"0/1 문자열이 아닙니다: {text!r}")
        return cls(tuple(int(ch) for ch in text))

    @classmethod
    def from_array(cls, arr) -> "BitString":
        return cls(tuple(int(b) for b in np.asarray(arr).ravel()))

    @classmethod
    def ones(cls, n: int) -> "BitString":
        """최적해 (1,...,1)"""
        return cls((1,) * n)

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls((0,) * n)

    def to_text(self) -> str:
        return "".join(str(b) for b in self.bits)

    def as_array(self) -> np.ndarray:
        """쓰기 가능한 uint8 복사본"""
        return np.array(self.bits, dtype=np.uint8)


class SelectionRule(Enum):
    """선택 규칙: STRICT = (1+1)-EA, NON_STRICT = 0온도 Metropolis"""

    STRICT = "strict"
    NON_STRICT = "nonstrict"

    def accepts(self, candidate_level, parent_level):
        """후보 채택 여부 (numpy 배열도 지원)"""
        if self is SelectionRule.STRICT:
            return candidate_level > parent_level
        return candidate_level >= parent_level


@dataclass(frozen=True)
class MutationKind:
    """
    변이 종류
    - oneflip: 균등하게 고른 비트 하나를 뒤집음 (ε = 1/n)
    - bernoulli: 각 비트를 독립적으로 확률 c/n 으로 뒤집음 (ε = c/n)
    """

    kind: str
    c: Optional[float] = None

    def __post_init__(self):
        if self.kind == "oneflip":
            if self.c is not None:
                raise ConfigError("oneflip 변이에는 c 를 지정하지 않습니다")
        elif self.kind == "bernoulli":
            if self.c is None or not math.isfinite(self.c) or self.c <= 0:
                raise ConfigError(f"bernoulli 변이의 c 는 양수여야 합니다: {self.c}")
            object.__setattr__(self, "c", float(self.c))
        else:
            raise ConfigError(f"알 수 없는 변이 종류: {self.kind}")

    @classmethod
    def one_flip(cls) -> "MutationKind":
        return cls("oneflip")

    @classmethod
    def bernoulli(cls, c: float) -> "MutationKind":
        return cls("bernoulli", c)

    @property
    def is_bernoulli(self) -> bool:
        return self.kind == "bernoulli"

    def validate_for(self, n: int):
        """ε = c/n 이 확률이 되도록 c ≤ n 확인"""
        if self.is_bernoulli and self.c > n:
            raise ConfigError(f"c={self.c:g} 가 n={n} 보다 큽니다 (ε = c/n ≤ 1 필요)")

    def epsilon(self, n: int) -> float:
        if self.is_bernoulli:
            return self.c / n
        return 1.0 / n

    def jump_probability(self, n: int, level: int) -> float:
        """레벨 level < n 에서 LeadingOnes 가 증가할 확률: 1/n 또는 ε(1-ε)^level"""
        if level >= n:
            return 0.0
        if self.is_bernoulli:
            eps = self.c / n
            return eps * (1.0 - eps) ** level
        return 1.0 / n

    def label(self) -> str:
        if self.is_bernoulli:
            return f"bernoulli(c={self.c:g})"
        return "oneflip"


@dataclass(frozen=True)
class ChainConfig:
    """체인 설정: n, 변이, 선택 규칙, 반복 상한"""

    n: int
    mutation: MutationKind = field(default_factory=MutationKind.one_flip)
    selection: SelectionRule = SelectionRule.STRICT
    max_iters: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ConfigError(f"n 은 양의 정수여야 합니다: {self.n}")
        object.__setattr__(self, "n", int(self.n))
        self.mutation.validate_for(self.n)
        if self.max_iters is None:
            object.__setattr__(self, "max_iters", _default_cap(self.n, self.mutation))
        elif self.max_iters < 1:
            raise ConfigError(f"max_iters 는 1 이상이어야 합니다: {self.max_iters}")


def _default_cap(n: int, mutation: MutationKind) -> int:
    if not mutation.is_bernoulli:
        return default_max_iters(n)
    from exact_engine import m_of_c

    try:
        m = m_of_c(mutation.c)
    except OverflowError:
        m = math.inf
    return default_max_iters(n, m)


@dataclass(frozen=True)
class ChainState:
    """X_k 와 세대 카운터 t, 캐시된 L(X_k)"""

    x: BitString
    t: int = 0
    level: int = -1

    def __post_init__(self):
        actual = leading_ones(self.x)
        if self.level < 0:
            object.__setattr__(self, "level", actual)
        elif self.level != actual:
            raise ValueError(f"level={self.level} 이 L(x)={actual} 와 다릅니다: {self.x}")


@dataclass(frozen=True)
class RunRecord:
    """
    Monte Carlo 반복 1회의 결과
    hitting_time 이 None 이면 반복 상한 초과 (capped)
    """

    hitting_time: Optional[int]
    initial_level: int
    initial_zeros: int
    replicate_index: int = 0
    substream_seed: int = 0

    @property
    def capped(self) -> bool:
        return self.hitting_time is None


# ============================================================
# 적합도 / 에너지
# ============================================================
def leading_ones(x) -> int:
    """L(x): 1 로만 이루어진 최대 접두사 길이"""
    arr = np.asarray(x.bits if isinstance(x, BitString) else x)
    zeros = np.flatnonzero(arr == 0)
    return int(zeros[0]) if zeros.size else int(arr.size)


def leading_ones_rows(matrix: np.ndarray) -> np.ndarray:
    """행마다 LeadingOnes 계산 (2차원 0/1 배열)"""
    matrix = np.asarray(matrix)
    n = matrix.shape[1]
    first_zero = np.argmin(matrix, axis=1)
    return np.where(matrix.all(axis=1), n, first_zero)


def hamiltonian(x, eps0: float = 1.0) -> float:
    """ℋ = -ε₀ L(x), 최소값 -ε₀ n 은 all-ones 에서만"""
    return -eps0 * leading_ones(x)


# ============================================================
# 변이 연산자
# ============================================================
def mutate_one_flip(x: BitString, rng: np.random.Generator) -> BitString:
    """균등하게 선택한 비트 하나를 뒤집은 새 비트 문자열"""
    arr = x.as_array()
    arr[rng.integers(x.n)] ^= 1
    return BitString.from_array(arr)


def mutate_bernoulli(x: BitString, c: float, rng: np.random.Generator) -> BitString:
    """각 비트를 독립적으로 확률 c/n 으로 뒤집음 (입력과 같을 수도 있음)"""
    if not 0 < c <= x.n:
        raise ConfigError(f"c 는 (0, n] 범위여야 합니다: c={c}, n={x.n}")
    arr = x.as_array()
    arr ^= (rng.random(x.n) < c / x.n).astype(np.uint8)
    return BitString.from_array(arr)


def mutate(x: BitString, mutation: MutationKind, rng: np.random.Generator) -> BitString:
    if mutation.is_bernoulli:
        return mutate_bernoulli(x, mutation.c, rng)
    return mutate_one_flip(x, rng)


# ============================================================
# 선택
# ============================================================
def metropolis_accept(delta_h: float, beta: float, rng: np.random.Generator) -> bool:
    """
    Metropolis 채택: 확률 min(1, exp(-β ΔH))
    β = ∞ 이면 ΔH ≤ 0 일 때만 채택 (LeadingOnes 에서는 비엄격 규칙과 동일)
    """
    if beta < 0:
        raise ValueError(f"beta 는 음수일 수 없습니다: {beta}")
    if delta_h <= 0:
        return True
    if math.isinf(beta):
        return False
    return bool(rng.random() < math.exp(-beta * delta_h))


def select(parent: ChainState, candidate: BitString, rule: SelectionRule) -> BitString:
    """규칙에 따라 후보 또는 부모를 다음 세대로 선택"""
    if candidate.n != parent.x.n:
        raise ValueError(f"길이 불일치: parent={parent.x.n}, candidate={candidate.n}")
    if rule.accepts(leading_ones(candidate), parent.level):
        return candidate
    return parent.x


def step(state: ChainState, config: ChainConfig, rng: np.random.Generator) -> ChainState:
    """변이 1회 + 선택 1회 = 한 세대"""
    candidate = mutate(state.x, config.mutation, rng)
    x = select(state, candidate, config.selection)
    level = state.level if x is state.x else leading_ones(x)
    return ChainState(x=x, t=state.t + 1, level=level)


# ============================================================
# 최적해 도달 반복
# ============================================================
def draw_initial(n: int, initial: Union[str, BitString], rng: np.random.Generator) -> np.ndarray:
    """X₀: 균등 분포 {0,1}ⁿ 또는 고정 비트 문자열"""
    if isinstance(initial, BitString):
        if initial.n != n:
            raise ConfigError(f"초기 비트 문자열 길이 {initial.n} ≠ n={n}")
        return initial.as_array()
    if initial != UNIFORM:
        raise ConfigError(f"알 수 없는 초기 상태: {initial!r}")
    return rng.integers(0, 2, size=n, dtype=np.uint8)


def run_to_optimum(config: ChainConfig, seed, initial: Union[str, BitString] = UNIFORM,
                   engine: str = DEFAULT_ENGINE, replicate_index: int = 0) -> RunRecord:
    """
    T = min{k ≥ 0 : L(X_k) = n} 까지 체인 실행

    Args:
        config: 체인 설정
        seed: 정수 시드 (같은 시드 → 같은 결과)
        initial: "uniform" 또는 BitString
        engine: "step" 은 step() 을 그대로 반복,
                "jump" 는 레벨별 체류시간을 기하분포로 한 번에 뽑음 (같은 분포)

    Returns:
        RunRecord (상한 초과 시 hitting_time=None)
    """
    if engine not in ENGINES:
        raise ConfigError(f"알 수 없는 엔진: {engine}")

    rng = np.random.default_rng(seed)
    x = draw_initial(config.n, initial, rng)
    level = leading_ones(x)
    zeros = int(config.n - x.sum())

    if engine == "step":
        hitting_time = _run_steps(x, config, rng)
    else:
        hitting_time = _run_jumps(x, level, config, rng)

    if hitting_time is None:
        logger.debug("반복 상한 초과: n=%d, seed=%s", config.n, seed)

    return RunRecord(
        hitting_time=hitting_time,
        initial_level=level,
        initial_zeros=zeros,
        replicate_index=replicate_index,
        substream_seed=int(seed),
    )


def _run_steps(x: np.ndarray, config: ChainConfig, rng: np.random.Generator) -> Optional[int]:
    state = ChainState(BitString.from_array(x))
    while state.level < config.n:
        if state.t >= config.max_iters:
            return None
        if config.mutation.jump_probability(config.n, state.level) == 0.0:
            # ε = 1, 레벨 ≥ 1: 진전 불가
            return None
        state = step(state, config, rng)
    return state.t


def _run_jumps(x: np.ndarray, level: int, config: ChainConfig,
               rng: np.random.Generator) -> Optional[int]:
    n = config.n
    mutation = config.mutation
    t = 0

    while level < n:
        q = mutation.jump_probability(n, level)
        if q <= 0.0:
            return None

        sojourn = int(rng.geometric(q))
        if t + sojourn > config.max_iters:
            return None
        t += sojourn

        if config.selection is SelectionRule.NON_STRICT and sojourn > 1:
            _apply_neutral_moves(x, level, sojourn - 1, q, mutation, rng)
        _apply_jump(x, level, mutation, rng)
        level = leading_ones(x)

    return t


def _apply_neutral_moves(x: np.ndarray, level: int, count: int, q: float,
                         mutation: MutationKind, rng: np.random.Generator):
    """
    레벨이 그대로인 count 번의 스텝 중 비엄격 규칙이 받아들인 이동을 접미사에 반영
    (접두사와 level+1 번째 비트가 유지된 후보만 채택됨)
    """
    n = x.size
    width = n - level - 1
    if width == 0:
        return
    suffix = x[level + 1:]

    if mutation.is_bernoulli:
        eps = mutation.c / n
        accept_prob = min(1.0, (1.0 - eps) ** (level + 1) / (1.0 - q))
        accepted = int(rng.binomial(count, accept_prob))
        if accepted:
            suffix ^= (rng.binomial(accepted, eps, size=width) & 1).astype(np.uint8)
    else:
        accepted = int(rng.binomial(count, width / (n - 1)))
        if accepted:
            hits = rng.multinomial(accepted, np.full(width, 1.0 / width))
            suffix ^= (hits & 1).astype(np.uint8)


def _apply_jump(x: np.ndarray, level: int, mutation: MutationKind, rng: np.random.Generator):
    """레벨 증가 조건부 후보: 접두사 유지, level+1 번째 비트 1, 나머지는 변이 그대로"""
    x[level] = 1
    width = x.size - level - 1
    if mutation.is_bernoulli and width:
        eps = mutation.c / x.size
        x[level + 1:] ^= (rng.random(width) < eps).astype(np.uint8)


if __name__ == "__main__":
    print("=" * 60)
    print("🧬 LeadingOnes 체인 테스트")
    print("=" * 60)

    for text in ["1101", "1111", "0111"]:
        bs = BitString.from_text(text)
        print(f"  L({text}) = {leading_ones(bs)}, H = {hamiltonian(bs)}")

    for mutation in [MutationKind.one_flip(), MutationKind.bernoulli(1.0)]:
        for rule in SelectionRule:
            config = ChainConfig(n=20, mutation=mutation, selection=rule)
            record = run_to_optimum(config, seed=42)
            print(f"  {mutation.label():20} {rule.value:9} → T = {record.hitting_time}")
