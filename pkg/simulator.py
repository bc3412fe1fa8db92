"""
Monte Carlo 실험 모듈
재현 가능한 시드 분할로 RunRecord 묶음을 병렬 생성

반복 i 는 (master_seed, i) 에서 유도한 독립 하위 스트림을 사용하므로
워커 수나 실행 순서와 무관하게 결과가 같다
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import repeat
from typing import List, Tuple, Union

import numpy as np

from chain import (
    ENGINES, UNIFORM, BitString, ChainConfig, ChainState, MutationKind, RunRecord,
    SelectionRule, leading_ones_rows, run_to_optimum, step,
)
from config import (
    DEFAULT_ENGINE, DEFAULT_MASTER_SEED, SIMULATION_CHUNK_SIZE,
    SUFFIX_BATCH_SIZE, SUFFIX_BUDGET_FACTOR, ConfigError, default_workers,
)
from exact_engine import level_transition_law, theta_statistic

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentPlan:
    """실험 계획: 체인 설정, 반복 수 R, 마스터 시드, 초기 상태"""

    config: ChainConfig
    replicates: int
    master_seed: int = DEFAULT_MASTER_SEED
    initial: Union[str, BitString] = UNIFORM
    engine: str = DEFAULT_ENGINE

    def __post_init__(self):
        if self.replicates < 1:
            raise ConfigError(f"replicates 는 1 이상이어야 합니다: {self.replicates}")
        if self.master_seed < 0:
            raise ConfigError(f"master_seed 는 0 이상이어야 합니다: {self.master_seed}")
        if self.engine not in ENGINES:
            raise ConfigError(f"알 수 없는 엔진: {self.engine}")
        if isinstance(self.initial, BitString):
            if self.initial.n != self.config.n:
                raise ConfigError(f"초기 비트 문자열 길이 {self.initial.n} ≠ n={self.config.n}")
        elif self.initial != UNIFORM:
            raise ConfigError(f"알 수 없는 초기 상태: {self.initial!r}")

    def to_dict(self) -> dict:
        """출처 기록용 (JSON sidecar)"""
        mutation = self.config.mutation
        return {
            "n": self.config.n,
            "mutation": mutation.kind,
            "c": mutation.c,
            "rule": self.config.selection.value,
            "R": self.replicates,
            "master_seed": self.master_seed,
            "max_iters": self.config.max_iters,
            "initial": self.initial if isinstance(self.initial, str) else self.initial.to_text(),
            "engine": self.engine,
        }


@dataclass(frozen=True)
class SampleSet:
    """replicate_index 0..R-1 순서의 완전한 RunRecord 모음"""

    records: Tuple[RunRecord, ...]
    plan: ExperimentPlan

    def __post_init__(self):
        indices = [r.replicate_index for r in self.records]
        if indices != list(range(self.plan.replicates)):
            raise ValueError("records 는 replicate_index 0..R-1 순서로 완전해야 합니다")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def capped_count(self) -> int:
        return sum(1 for r in self.records if r.capped)

    def hitting_times(self) -> np.ndarray:
        """상한에 걸리지 않은 반복의 적중시간"""
        return np.array([r.hitting_time for r in self.records if not r.capped], dtype=np.int64)

    def initial_levels(self) -> np.ndarray:
        return np.array([r.initial_level for r in self.records], dtype=np.int64)

    def initial_zeros(self) -> np.ndarray:
        return np.array([r.initial_zeros for r in self.records], dtype=np.int64)

    def theta_values(self) -> np.ndarray:
        config = self.plan.config
        return theta_statistic(self.hitting_times(), config.n, config.mutation)


@dataclass(frozen=True, eq=False)
class FrequencyTable:
    """조건부 샘플링 결과: 칸별 빈도와 요청/획득/시도 수"""

    counts: np.ndarray
    labels: Tuple[str, ...]
    requested: int
    obtained: int
    attempts: int

    @property
    def complete(self) -> bool:
        return self.obtained >= self.requested


# ============================================================
# 시드 분할
# ============================================================
def derive_substream_seed(master_seed: int, replicate_index: int) -> int:
    """
    (master_seed, replicate_index) → 64비트 시드
    numpy SeedSequence 의 해시 혼합 (spawn_key = (replicate_index,)) 을 사용
    """
    sequence = np.random.SeedSequence(entropy=master_seed, spawn_key=(replicate_index,))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def _run_chunk(plan: ExperimentPlan, start: int, stop: int) -> List[RunRecord]:
    records = []
    for index in range(start, stop):
        seed = derive_substream_seed(plan.master_seed, index)
        records.append(run_to_optimum(plan.config, seed, plan.initial,
                                      engine=plan.engine, replicate_index=index))
    return records


def run_experiment(plan: ExperimentPlan, workers: int = None) -> SampleSet:
    """
    R 개 독립 반복 실행
    워커 수와 관계없이 같은 plan → 같은 SampleSet
    상한 초과 반복은 버리지 않고 표시만 함
    """
    workers = workers or default_workers()
    if workers < 1:
        raise ConfigError(f"workers 는 1 이상이어야 합니다: {workers}")

    starts = list(range(0, plan.replicates, SIMULATION_CHUNK_SIZE))
    stops = [min(s + SIMULATION_CHUNK_SIZE, plan.replicates) for s in starts]
    logger.debug("엔진=%s, 워커=%d, 청크=%d, max_iters=%d",
                 plan.engine, workers, len(starts), plan.config.max_iters)

    if workers == 1 or len(starts) == 1:
        chunks = [_run_chunk(plan, a, b) for a, b in zip(starts, stops)]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(starts))) as pool:
            # map 은 입력 순서를 유지
            chunks = list(pool.map(_run_chunk, repeat(plan), starts, stops))

    records = tuple(r for chunk in chunks for r in chunk)
    sample_set = SampleSet(records=records, plan=plan)

    if sample_set.capped_count:
        logger.warning("반복 상한 %d 초과: %d / %d 개",
                       plan.config.max_iters, sample_set.capped_count, plan.replicates)
    logger.info("실험 완료: n=%d %s %s R=%d",
                plan.config.n, plan.config.mutation.label(),
                plan.config.selection.value, plan.replicates)
    return sample_set


# ============================================================
# 첫 점프 조건부 샘플링 (접미사 균등성, 레벨 전이)
# ============================================================
def _run_until_jump(row: np.ndarray, config: ChainConfig,
                    rng: np.random.Generator) -> np.ndarray:
    """step() 을 레벨이 오를 때까지 반복한 뒤의 상태"""
    state = ChainState(BitString.from_array(row))
    level = state.level
    while state.level == level:
        state = step(state, config, rng)
    return state.x.as_array()


def _jump_directly(x: np.ndarray, level: int, eps: float, rng: np.random.Generator):
    """레벨 증가 조건부 후보를 배치로 구성: level+1 번째 비트 1, 나머지 비트는 ε 로 뒤집힘"""
    x[:, level] = 1
    x[:, level + 1:] ^= (rng.random((x.shape[0], x.shape[1] - level - 1)) < eps).astype(np.uint8)
    return x


def _sample_first_jumps(n: int, c: float, level: int, draws: int, master_seed: int,
                        direct: bool, draw_budget: int = None,
                        rule: SelectionRule = SelectionRule.STRICT):
    """
    ℓ₀ = level 인 X₀ 에서 첫 점프 직후 상태를 draws 개 생성

    direct=False: 균등 X₀ 를 뽑고 ℓ₀ 로 기각한 뒤 체인을 step() 으로 실제 실행
    direct=True:  X₀ = (1^level, 0, 균등) 을 직접 구성하고 점프 후보를 배치로 생성 (빠른 경로)

    Returns:
        (접미사 행렬, 새 레벨 배열, 시도 수)
    """
    mutation = MutationKind.bernoulli(c)
    mutation.validate_for(n)
    if not 0 <= level < n:
        raise ConfigError(f"조건 레벨은 0 ≤ i < n 이어야 합니다: i={level}, n={n}")
    if draws < 1:
        raise ConfigError(f"draws 는 1 이상이어야 합니다: {draws}")
    if mutation.jump_probability(n, level) == 0.0:
        raise ConfigError(f"레벨 {level} 에서 진전 불가 (c={c:g}, n={n})")

    config = ChainConfig(n, mutation, rule)
    eps = mutation.epsilon(n)
    width = n - level - 1
    budget = draw_budget or draws * 2 ** (level + 1) * SUFFIX_BUDGET_FACTOR
    rng = np.random.default_rng(master_seed)

    suffixes, new_levels = [], []
    obtained = attempts = 0
    while obtained < draws and attempts < budget:
        batch = min(SUFFIX_BATCH_SIZE, budget - attempts)
        if direct:
            batch = min(batch, draws - obtained)
        x = rng.integers(0, 2, size=(batch, n), dtype=np.uint8)
        attempts += batch
        if direct:
            x[:, :level] = 1
            x[:, level] = 0
            x = _jump_directly(x, level, eps, rng)
        else:
            x = x[leading_ones_rows(x) == level][: draws - obtained]
            x = np.array([_run_until_jump(row, config, rng) for row in x],
                         dtype=np.uint8).reshape(-1, n)

        suffixes.append(x[:, level + 1:])
        new_levels.append(leading_ones_rows(x))
        obtained += x.shape[0]

    if obtained < draws:
        logger.warning("조건부 샘플 부족: %d / %d (시도 %d)", obtained, draws, attempts)

    suffix_matrix = np.concatenate(suffixes) if suffixes else np.zeros((0, width), np.uint8)
    level_array = np.concatenate(new_levels) if new_levels else np.zeros(0, np.int64)
    return suffix_matrix, level_array, attempts


def collect_suffix_samples(n: int, c: float, conditioned_level: int, draws: int,
                           master_seed: int = DEFAULT_MASTER_SEED, direct: bool = False,
                           draw_budget: int = None,
                           rule: SelectionRule = SelectionRule.STRICT) -> FrequencyTable:
    """
    ℓ₀ = i 조건에서 첫 점프 후 접미사 W₁ ∈ {0,1}^{n-i-1} 의 빈도표
    칸 순서: 접미사를 이진수로 읽은 값 (첫 비트가 최상위)
    """
    suffixes, _, attempts = _sample_first_jumps(n, c, conditioned_level, draws,
                                                master_seed, direct, draw_budget, rule)
    width = n - conditioned_level - 1
    weights = 1 << np.arange(width - 1, -1, -1)
    cells = suffixes.astype(np.int64) @ weights if width else np.zeros(len(suffixes), np.int64)
    counts = np.bincount(cells, minlength=1 << width)
    labels = tuple(format(k, f"0{width}b") if width else "" for k in range(1 << width))
    return FrequencyTable(counts=counts, labels=labels, requested=draws,
                          obtained=int(counts.sum()), attempts=attempts)


def collect_level_transitions(n: int, c: float, from_level: int, draws: int,
                              master_seed: int = DEFAULT_MASTER_SEED, direct: bool = False,
                              draw_budget: int = None,
                              rule: SelectionRule = SelectionRule.STRICT) -> FrequencyTable:
    """ℓ₀ = i 조건에서 첫 점프 후 레벨 ℓ₁ ∈ {i+1..n} 의 빈도표"""
    _, new_levels, attempts = _sample_first_jumps(n, c, from_level, draws,
                                                  master_seed, direct, draw_budget, rule)
    counts = np.bincount(new_levels, minlength=n + 1)[from_level + 1:]
    labels = tuple(str(j) for j in range(from_level + 1, n + 1))
    return FrequencyTable(counts=counts, labels=labels, requested=draws,
                          obtained=int(counts.sum()), attempts=attempts)


def expected_level_probs(n: int, from_level: int) -> np.ndarray:
    """collect_level_transitions 칸 순서에 맞춘 이론 확률"""
    return level_transition_law(n).row_vector(from_level)


if __name__ == "__main__":
    import time

    print("=" * 60)
    print("🎲 Monte Carlo 실험 테스트")
    print("=" * 60)

    plan = ExperimentPlan(ChainConfig(n=100), replicates=1000, master_seed=42)
    start = time.time()
    samples = run_experiment(plan, workers=1)
    times = samples.hitting_times()
    print(f"  n=100 one-flip: 평균 {times.mean():.1f} (n²/2 = 5000), "
          f"{time.time() - start:.1f}초")

    table = collect_suffix_samples(5, 1.0, 1, 10_000, master_seed=7)
    print(f"  접미사 빈도 (n=5, i=1): {dict(zip(table.labels, table.counts.tolist()))}")
