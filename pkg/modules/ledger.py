"""
원장(ledger) 관리 모듈

JSON 보고서/인증서와 CSV 표를 출력 폴더에 저장합니다. 같은 설정이면 바이트 단위로
같은 파일이 나오도록 타임스탬프를 넣지 않고 키를 정렬합니다.
"""
import json
import logging
import os

import numpy as np
import pandas as pd

import config
from modules.utils import artifact_digest, pop_stages

CSV_FLOAT_FORMAT = "%.15g"


# =============================================================================
# 파일 입출력
# =============================================================================
def ensure_output_folder(folder):
    os.makedirs(folder, exist_ok=True)
    return folder


def save_json(path, payload):
    """JSON 저장 (키 정렬, UTF-8)"""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    logging.info(f"📦 JSON 저장: {path}")
    return path


def load_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def save_csv(path, table):
    """list[dict] 또는 DataFrame을 CSV로 저장합니다."""
    df = table if isinstance(table, pd.DataFrame) else pd.DataFrame(table)
    df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logging.info(f"📦 CSV 저장: {path} ({len(df)}행)")
    return path


def write_artifacts(folder, artifacts):
    """
    {파일 이름: dict(JSON) | list/DataFrame(CSV)} 를 모두 저장합니다.

    Returns:
        저장한 경로 목록 (파일 이름 순)
    """
    ensure_output_folder(folder)
    paths = []
    for name in sorted(artifacts):
        path = os.path.join(folder, name)
        content = artifacts[name]
        if name.endswith(".json"):
            save_json(path, content)
        else:
            save_csv(path, content)
        logging.info(f"📋 {name}: sha256 {artifact_digest(path)[:16]}")
        paths.append(path)
    return paths


# =============================================================================
# 표 구성
# =============================================================================
def header(command, scenario):
    return {
        "schema_version": config.SCHEMA_VERSION,
        "tool_version": config.TOOL_VERSION,
        "command": command,
        "config_hash": scenario.fingerprint(),
    }


def report_payload(command, scenario, task_id, checks, results):
    """보고서 JSON: 헤더 + 검사 목록 + 단계 기록 + 결과 값"""
    payload = header(command, scenario)
    payload.update(
        {
            "passed": all(c.passed for c in checks),
            "checks": check_rows(checks),
            "stages": pop_stages(task_id),
            "results": _plain(results),
        }
    )
    return payload


def _plain(value):
    """numpy 값을 JSON으로 직렬화 가능한 값으로 바꿉니다."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def check_rows(checks):
    return [c.as_row() for c in checks]


def field_samples_frame(field, mesh, limit=None):
    """곡면 격자 노드의 (u, v, 점, 속도) 표 (외부 시각화용)"""
    count = mesh.count if limit is None else min(limit, mesh.count)
    u, v = mesh.u[:count], mesh.v[:count]
    points = mesh.surface.embed(u, v)
    vectors = field.cartesian(u, v)
    return pd.DataFrame(
        {
            "u": u,
            "v": v,
            "x": points[:, 0],
            "y": points[:, 1],
            "z": points[:, 2],
            "vx": vectors[:, 0],
            "vy": vectors[:, 1],
            "vz": vectors[:, 2],
        }
    )


def trajectory_frame(iso, count=None):
    """궤적 표: (particle, t, x, y, z, jac)"""
    count = iso.particle_count if count is None else min(count, iso.particle_count)
    times = iso.times
    rows = []
    for p in range(count):
        jac = iso.jacobian[:, p] if iso.jacobian is not None else np.full(times.shape, np.nan)
        rows.append(
            pd.DataFrame(
                {
                    "particle": p,
                    "t": times,
                    "x": iso.points[:, p, 0],
                    "y": iso.points[:, p, 1],
                    "z": iso.points[:, p, 2],
                    "jac": jac,
                }
            )
        )
    return pd.concat(rows, ignore_index=True)


def energy_frame(reports):
    """EnergyReport 목록 → 에너지 원장 표"""
    return pd.DataFrame([report.as_row(block_id) for block_id, report in reports])
