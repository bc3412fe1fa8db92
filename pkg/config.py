"""
LeadingOnes 적중시간 분석 시스템 설정
(1+1)-EA / 0온도 Metropolis 체인, 정확 분포 엔진, 검증 스위트의 공통 상수

설정 파일과 환경 변수는 읽지 않는다 (CLI 플래그만 사용)
"""

import logging
import math
import os

# ============================================================
# 예외
# ============================================================
class ConfigError(ValueError):
    """잘못된 파라미터 (c 범위, n 한계, 비트 문자열 등)"""


# ============================================================
# 엔진 한계
# ============================================================
BRUTE_FORCE_MAX_N = 12        # 전이행렬 오라클: 상태 수 2^n
EXACT_ONEFLIP_MAX_N = 64      # 이항 혼합 (이항계수 정확도 한계)
EXACT_BERNOULLI_MAX_N = 1024  # 레벨 곱 형태 (O(n·t_max))

# ============================================================
# 수치 허용오차
# ============================================================
PMF_SUM_TOLERANCE = 1e-12   # sum(mass) + tail = 1
TAIL_TOLERANCE = 1e-12      # 자동 t_max 선택 시 꼬리 질량 상한
TV_TOLERANCE = 1e-10        # 정확 분포 vs 오라클 총변동거리
MEAN_RELATIVE_TOLERANCE = 1e-9

# ============================================================
# 시뮬레이션 파라미터
# ============================================================
MAX_ITERS_FACTOR = 100           # max_iters = 100 · n² · max(1, m(c))
MAX_ITERS_CEILING = 10 ** 15     # m(c) 오버플로 시 상한
DEFAULT_MASTER_SEED = 0
DEFAULT_REPLICATES = 10_000
DEFAULT_ENGINE = "jump"          # "jump" | "step"
SIMULATION_CHUNK_SIZE = 256      # 워커당 한 번에 처리할 반복 수
SUFFIX_BATCH_SIZE = 8192         # 조건부 접미사 샘플링 배치 크기
SUFFIX_BUDGET_FACTOR = 8         # 시도 예산 = draws · 2^{i+1} · 8

# ============================================================
# 검증 임계값 (유한 n 에서의 극한 정리 확인용 고정 상수)
# ============================================================
KS_ALPHA = 0.01
CHI2_QUANTILE = 0.999
CHI2_MIN_EXPECTED = 5.0
SE_MULTIPLIER = 3.0                  # |mean - E| < 3·SE

CLT_ONEFLIP_KS = 0.05
CLT_ONEFLIP_VAR_TOL = 0.10
CLT_BERNOULLI_KS = 0.06
CLT_BERNOULLI_VAR_TOL = 0.15

LLN_BERNOULLI_TOL_100 = 0.05         # n=100: mean/n² vs m(c)
LLN_BERNOULLI_TOL_1000 = 0.005       # n=1000
CONCENTRATION_DELTA = 0.1            # |T/E(T) - 1| > δ 비율

# ============================================================
# 비교 설정
# ============================================================
COMPARE_N0 = 10
DEFAULT_C_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)

# ============================================================
# 출력 설정
# ============================================================
OUTPUT_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "logs")
DATA_DIGITS = 17      # CSV/JSON 데이터
SUMMARY_DIGITS = 6    # 콘솔 요약

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


# ============================================================
# 유틸리티 함수
# ============================================================
def format_float(value, digits=DATA_DIGITS):
    """부동소수점을 유효숫자 digits 자리 문자열로 변환"""
    if value is None:
        return ""
    return format(float(value), f".{digits}g")


def default_max_iters(n, m_coefficient=1.0):
    """
    반복 상한 기본값
    적중시간은 Θ(n²) 에 집중되므로 100·n²·max(1, m(c)) 은 사실상 도달하지 않음
    """
    try:
        cap = math.ceil(MAX_ITERS_FACTOR * n * n * max(1.0, m_coefficient))
    except OverflowError:
        return MAX_ITERS_CEILING
    return min(cap, MAX_ITERS_CEILING)


def default_workers():
    """기본 워커 수 (머신 병렬도)"""
    return os.cpu_count() or 1


def setup_logging(verbose=False):
    """루트 로거 설정 (CLI 진입 시 한 번)"""
    level = logging.DEBUG if verbose else logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


if __name__ == "__main__":
    print("\n" + "=" * 60)
    print("⚙️ LeadingOnes 적중시간 분석 설정")
    print("=" * 60)
    print(f"  전이행렬 오라클 한계: n ≤ {BRUTE_FORCE_MAX_N}")
    print(f"  One-flip 정확 분포 한계: n ≤ {EXACT_ONEFLIP_MAX_N}")
    print(f"  Bernoulli 정확 분포 한계: n ≤ {EXACT_BERNOULLI_MAX_N}")
    print(f"  TV 허용오차: {TV_TOLERANCE}")
    print(f"  출력 디렉토리: {OUTPUT_DIR}")
    for n in [10, 100, 1000]:
        print(f"  n={n}: max_iters 기본값 {default_max_iters(n)}")
