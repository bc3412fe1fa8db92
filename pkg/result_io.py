"""
결과 파일 저장 모듈
Pmf / SampleSet / 비교표 CSV·JSON, 검증 보고서 번들 JSON

데이터 값은 유효숫자 17자리, 타임스탬프는 넣지 않음 (같은 입력 → 같은 바이트)
"""

import csv
import json
import math
import os
from typing import Iterable, List, Sequence

from config import format_float


def _ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _sidecar_path(path: str) -> str:
    """run.csv → run.plan.json (출력 경로와 겹치지 않음)"""
    root, _ = os.path.splitext(path)
    return root + ".plan.json"


def _json_safe(value):
    """∞ / NaN 은 null 로 (엄격한 JSON)"""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _dump_json(data, path: str):
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_json_safe(data), f, indent=2, ensure_ascii=False, allow_nan=False)
        f.write("\n")


def write_pmf(pmf, path: str, fmt: str = "csv") -> List[str]:
    """
    csv: 헤더 't,mass' + 마지막 줄 '# tail=<value>'
    json: {"t_max", "tail", "mass": [...]}
    """
    if fmt == "json":
        _dump_json({
            "t_max": pmf.t_max,
            "tail": float(pmf.tail),
            "mass": [float(m) for m in pmf.mass],
        }, path)
        return [path]

    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("t,mass\n")
        for t, m in enumerate(pmf.mass):
            f.write(f"{t},{format_float(m)}\n")
        f.write(f"# tail={format_float(pmf.tail)}\n")
    return [path]


def write_sample_set(sample_set, path: str, fmt: str = "csv") -> List[str]:
    """
    csv: 'replicate,hitting_time,initial_level,capped' + <stem>.plan.json (ExperimentPlan)
    json: plan 과 records 를 한 파일에
    """
    plan = sample_set.plan.to_dict()
    if fmt == "json":
        _dump_json({
            "plan": plan,
            "records": [
                {
                    "replicate": r.replicate_index,
                    "hitting_time": r.hitting_time,
                    "initial_level": r.initial_level,
                    "initial_zeros": r.initial_zeros,
                    "capped": r.capped,
                    "substream_seed": r.substream_seed,
                }
                for r in sample_set.records
            ],
        }, path)
        return [path]

    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["replicate", "hitting_time", "initial_level", "capped"])
        for r in sample_set.records:
            writer.writerow([
                r.replicate_index,
                "" if r.capped else r.hitting_time,
                r.initial_level,
                int(r.capped),
            ])
    sidecar = _sidecar_path(path)
    _dump_json(plan, sidecar)
    return [path, sidecar]


def write_table(rows: Iterable[dict], columns: Sequence[str], path: str,
                fmt: str = "csv") -> List[str]:
    """비교표 등 일반 표 저장 (float 은 17자리)"""
    rows = list(rows)
    if fmt == "json":
        _dump_json(rows, path)
        return [path]

    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([
                format_float(row.get(col)) if isinstance(row.get(col), float) else row.get(col, "")
                for col in columns
            ])
    return [path]


def write_report_bundle(suite: str, reports, runtime_ms: float, path: str) -> List[str]:
    """{suite, pass, runtime_ms, reports: [TestReport...]}"""
    reports = list(reports)
    _dump_json({
        "suite": suite,
        "pass": all(r.passed for r in reports),
        "runtime_ms": round(runtime_ms, 3),
        "reports": [r.to_dict() for r in reports],
    }, path)
    return [path]
