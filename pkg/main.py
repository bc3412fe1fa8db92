#!/usr/bin/env python3
"""
LeadingOnes 적중시간 분석 도구
메인 실행 스크립트

    python main.py simulate --n 100 --mutation oneflip --replicates 10000 --seed 42
    python main.py exact --n 2 --mutation bernoulli --c 1
    python main.py verify --suite oracle
    python main.py compare --n 100 --c-grid 0.25 0.5 1 2 4

종료 코드: 0 성공, 1 검증/비교 실패 또는 실행 오류, 2 인자 오류
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

from chain import (
    ENGINES, UNIFORM, BitString, ChainConfig, MutationKind, SelectionRule,
)
from config import (
    COMPARE_N0, DEFAULT_C_GRID, DEFAULT_ENGINE, DEFAULT_MASTER_SEED, DEFAULT_REPLICATES,
    OUTPUT_DIR, SUMMARY_DIGITS, ConfigError, setup_logging,
)
from exact_engine import (
    bernoulli_exact_mean, bernoulli_exact_pmf, bernoulli_moments, m_of_c, oneflip_exact_pmf,
    oneflip_moments, sigma2_of_c,
)
from result_io import write_pmf, write_report_bundle, write_sample_set, write_table
from simulator import ExperimentPlan, run_experiment
from stats_tests import summarize
from verify_suites import SUITES, VerifyOptions, run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

COMPARE_COLUMNS = (
    "n", "c", "m_c", "oneflip_mean", "bernoulli_mean",
    "oneflip_ratio", "bernoulli_ratio", "bernoulli_slower",
)


def _g(value) -> str:
    """사람용 요약 (유효숫자 6자리)"""
    return f"{value:.{SUMMARY_DIGITS}g}"


def _mutation_from_args(args) -> MutationKind:
    if args.mutation == "bernoulli":
        return MutationKind.bernoulli(args.c)
    return MutationKind.one_flip()


def _mutation_tag(mutation: MutationKind) -> str:
    return f"bernoulli_c{mutation.c:g}" if mutation.is_bernoulli else "oneflip"


def _default_output(stem: str, fmt: str) -> str:
    return os.path.join(OUTPUT_DIR, f"{stem}.{fmt}")


def _print_saved(paths: List[str]):
    for path in paths:
        print(f"   - 저장: {path}")


# ============================================================
# simulate
# ============================================================
def cmd_simulate(args) -> int:
    mutation = _mutation_from_args(args)
    config = ChainConfig(args.n, mutation, SelectionRule(args.rule), args.max_iters)
    initial = UNIFORM if args.initial == UNIFORM else BitString.from_text(args.initial)
    plan = ExperimentPlan(config, replicates=args.replicates, master_seed=args.seed,
                          initial=initial, engine=args.engine)

    print("\n" + "=" * 60)
    print(f"🎲 Monte Carlo: n={config.n}, {mutation.label()}, {config.selection.value}, "
          f"R={plan.replicates}, seed={plan.master_seed}")
    print("=" * 60)

    sample_set = run_experiment(plan, workers=args.workers)
    times = sample_set.hitting_times()

    print(f"\n📊 결과 요약:")
    print(f"   - 완료 반복: {times.size} / {plan.replicates} (상한 초과 {sample_set.capped_count})")
    if times.size >= 2:
        summary = summarize(times, n=config.n, mutation=mutation)
        print(f"   - 평균 T: {_g(summary.mean)} ± {_g(summary.std_error)}")
        print(f"   - 분산 T: {_g(summary.variance)}")
        print(f"   - Θ 평균/분산: {_g(summary.theta_mean)} / {_g(summary.theta_variance)}")
    elif times.size == 1:
        print(f"   - T = {int(times[0])}")

    stem = (f"simulate_n{config.n}_{_mutation_tag(mutation)}_{config.selection.value}"
            f"_R{plan.replicates}_seed{plan.master_seed}")
    output = args.output or _default_output(stem, args.format)
    _print_saved(write_sample_set(sample_set, output, args.format))
    return EXIT_OK


# ============================================================
# exact
# ============================================================
def cmd_exact(args) -> int:
    mutation = _mutation_from_args(args)
    n = args.n
    if mutation.is_bernoulli:
        pmf = bernoulli_exact_pmf(n, mutation.c, args.t_max)
        moments = bernoulli_moments(n, mutation.c)
        mean_ref, var_ref = m_of_c(mutation.c) * n ** 2, sigma2_of_c(mutation.c) * n ** 3
        ref_labels = ("m(c)·n²", "σ²(c)·n³")
    else:
        pmf = oneflip_exact_pmf(n, args.t_max)
        moments = oneflip_moments(n)
        mean_ref, var_ref = n * n / 2.0, 0.75 * n ** 3
        ref_labels = ("n²/2", "3n³/4")

    print("\n" + "=" * 60)
    print(f"📐 정확 분포: n={n}, {mutation.label()}")
    print("=" * 60)
    print(f"   - 평균 E(T): {_g(moments.mean)}   ({ref_labels[0]} = {_g(mean_ref)})")
    print(f"   - 분산 Var(T): {_g(moments.variance)}   ({ref_labels[1]} = {_g(var_ref)})")
    print(f"   - t_max = {pmf.t_max}, 꼬리 질량 = {pmf.tail:.3e}")

    output = args.output or _default_output(f"exact_n{n}_{_mutation_tag(mutation)}", args.format)
    _print_saved(write_pmf(pmf, output, args.format))
    return EXIT_OK


# ============================================================
# verify
# ============================================================
def cmd_verify(args) -> int:
    options = VerifyOptions(n=args.n, replicates=args.replicates, seed=args.seed,
                            workers=args.workers, engine=args.engine)

    print("\n" + "=" * 60)
    print(f"🧪 검증 스위트: {args.suite}")
    print("=" * 60)

    result = run_suite(args.suite, options)
    for report in result.reports:
        mark = "✅" if report.passed else "❌"
        print(f"  {mark} {report.test}: {_g(report.statistic)} (기준 {_g(report.threshold)})")

    failed = [r for r in result.reports if not r.passed]
    print(f"\n📊 {len(result.reports) - len(failed)} / {len(result.reports)} 통과, "
          f"{result.runtime_ms / 1000.0:.1f}초")

    output = args.output or _default_output(f"verify_{args.suite}_seed{args.seed}", "json")
    _print_saved(write_report_bundle(args.suite, result.reports, result.runtime_ms, output))
    return EXIT_OK if not failed else EXIT_FAILURE


# ============================================================
# compare
# ============================================================
def comparison_rows(ns, c_grid) -> List[dict]:
    """n 과 c 마다 one-flip / Bernoulli 정확 평균과 n²/2 대비 비율"""
    rows = []
    for n in ns:
        oneflip_mean = oneflip_moments(n).mean
        for c in c_grid:
            if c > n:
                logger.warning("c=%g > n=%d 건너뜀", c, n)
                continue
            bernoulli_mean = bernoulli_exact_mean(n, c)
            rows.append({
                "n": n,
                "c": float(c),
                "m_c": m_of_c(c),
                "oneflip_mean": oneflip_mean,
                "bernoulli_mean": bernoulli_mean,
                "oneflip_ratio": 1.0,
                "bernoulli_ratio": bernoulli_mean / oneflip_mean,
                "bernoulli_slower": int(bernoulli_mean > oneflip_mean),
            })
    return rows


def cmd_compare(args) -> int:
    ns = sorted(set(args.n))
    rows = comparison_rows(ns, args.c_grid)

    print("\n" + "=" * 60)
    print(f"⚖️  one-flip vs Bernoulli 정확 평균 (n₀={args.n0})")
    print("=" * 60)
    for row in rows:
        print(f"  n={row['n']:<6} c={_g(row['c']):<6} m(c)={_g(row['m_c']):<10} "
              f"E_B/E_1={_g(row['bernoulli_ratio'])}")

    violations = [r for r in rows if r["n"] >= args.n0 and not r["bernoulli_slower"]]
    for row in violations:
        print(f"  ❌ n={row['n']}, c={_g(row['c'])}: Bernoulli 평균이 one-flip 보다 작거나 같음")

    stem = "compare_n" + "_".join(str(n) for n in ns)
    output = args.output or _default_output(stem, args.format)
    _print_saved(write_table(rows, COMPARE_COLUMNS, output, args.format))

    if violations:
        return EXIT_FAILURE
    print("\n✅ 모든 n ≥ n₀ 에서 one-flip 이 더 빠름")
    return EXIT_OK


# ============================================================
# 인자 파싱
# ============================================================
def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"1 이상의 정수여야 합니다: {text}")
    return value


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"0 이상의 정수여야 합니다: {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"양수여야 합니다: {text}")
    return value


def _add_chain_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--n", type=_positive_int, required=True, help="비트 문자열 길이")
    parser.add_argument("--mutation", choices=["oneflip", "bernoulli"], default="oneflip",
                        help="변이 종류")
    parser.add_argument("--c", type=_positive_float, help="Bernoulli 변이 계수 (ε = c/n)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="LeadingOnes 위 (1+1)-EA / 0온도 Metropolis 적중시간 분석 도구"
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", "-v", action="store_true", help="DEBUG 로그 출력")
    common.add_argument("--output", "-o", help="결과 파일 경로 (기본: logs/ 아래 결정적 이름)")

    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", parents=[common], help="Monte Carlo 실행")
    _add_chain_arguments(simulate)
    simulate.add_argument("--rule", choices=[r.value for r in SelectionRule],
                          default=SelectionRule.STRICT.value, help="선택 규칙")
    simulate.add_argument("--replicates", "-R", type=_positive_int, default=DEFAULT_REPLICATES)
    simulate.add_argument("--seed", type=_non_negative_int, default=DEFAULT_MASTER_SEED)
    simulate.add_argument("--initial", default=UNIFORM,
                          help="'uniform' 또는 0/1 문자열 (예: 1101)")
    simulate.add_argument("--max-iters", type=_positive_int, default=None)
    simulate.add_argument("--engine", choices=ENGINES, default=DEFAULT_ENGINE)
    simulate.add_argument("--workers", type=_positive_int, default=None)
    simulate.add_argument("--format", choices=["csv", "json"], default="csv")
    simulate.set_defaults(handler=cmd_simulate)

    exact = sub.add_parser("exact", parents=[common], help="정확 분포 계산")
    _add_chain_arguments(exact)
    exact.add_argument("--t-max", type=_non_negative_int, default=None)
    exact.add_argument("--format", choices=["csv", "json"], default="csv")
    exact.set_defaults(handler=cmd_exact)

    verify = sub.add_parser("verify", parents=[common], help="검증 스위트 실행")
    verify.add_argument("--suite", choices=list(SUITES) + ["all"], default="all")
    verify.add_argument("--n", type=_positive_int, default=None, help="스위트 기본 n 대신 사용")
    verify.add_argument("--replicates", "-R", type=_positive_int, default=None)
    verify.add_argument("--seed", type=_non_negative_int, default=DEFAULT_MASTER_SEED)
    verify.add_argument("--engine", choices=ENGINES, default=DEFAULT_ENGINE)
    verify.add_argument("--workers", type=_positive_int, default=None)
    verify.set_defaults(handler=cmd_verify)

    compare = sub.add_parser("compare", parents=[common], help="one-flip vs Bernoulli 평균 비교")
    compare.add_argument("--n", type=_positive_int, nargs="+", default=[100])
    compare.add_argument("--c-grid", type=_positive_float, nargs="+", default=list(DEFAULT_C_GRID))
    compare.add_argument("--n0", type=_positive_int, default=COMPARE_N0)
    compare.add_argument("--format", choices=["csv", "json"], default="csv")
    compare.set_defaults(handler=cmd_compare)
    return parser


def _validate(parser: argparse.ArgumentParser, args):
    if args.command in ("simulate", "exact"):
        if args.mutation == "bernoulli" and args.c is None:
            parser.error("--mutation bernoulli 에는 --c 가 필요합니다")
        if args.mutation == "oneflip" and args.c is not None:
            parser.error("--c 는 --mutation bernoulli 에서만 사용합니다")
        if args.c is not None and args.c > args.n:
            parser.error(f"--c {args.c:g} 는 --n {args.n} 이하여야 합니다")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(parser, args)
    setup_logging(args.verbose)

    try:
        return args.handler(args)
    except ConfigError as e:
        print(f"❌ 설정 오류: {e}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        print("\n\n⏹️ 사용자에 의해 중지됨")
        return EXIT_FAILURE
    except Exception as e:
        logger.debug("실행 오류", exc_info=True)
        print(f"❌ 실행 오류: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
