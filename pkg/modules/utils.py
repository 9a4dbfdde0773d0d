"""
유틸리티 함수 모듈
"""
import hashlib
import json
import logging
import math
from dataclasses import dataclass

import numpy as np

# 작업별 단계 기록 {task_id: {step: {"progress", "message"}}}
stage_log = {}


def artifact_digest(path):
    """산출물 파일 바이트의 SHA-256 (재현성 비교와 저장 로그용)"""
    hasher = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            hasher.update(block)
    return hasher.hexdigest()


def canonical_hash(payload):
    """
    JSON으로 직렬화 가능한 객체의 정규화 해시

    키 정렬, 공백 없는 구분자로 직렬화하므로 같은 설정은 항상 같은 해시를 가집니다.
    """
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def smoothstep5(t):
    """
    5차 smoothstep 다항식 S(t) = 10t³ − 15t⁴ + 6t⁵ (t는 [0, 1]로 잘림)

    S(0)=0, S(1)=1 이고 양 끝에서 1·2계 도함수가 0 (C² 접합).
    """
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def wrap_angle(angle):
    """각도를 [−π, π) 구간으로 감습니다."""
    return np.mod(np.asarray(angle, dtype=float) + math.pi, 2.0 * math.pi) - math.pi


def update_progress(task_id, step, progress, message):
    """파이프라인 단계 기록 (보고서의 stages 표가 됩니다)"""
    stage_log.setdefault(task_id, {})[step] = {"progress": int(progress), "message": message}
    logging.info(f"📋 [{task_id}] {step}: {progress}% - {message}")


def pop_stages(task_id):
    """작업의 단계 기록을 꺼내고 지웁니다. 기록이 없으면 빈 dict."""
    return stage_log.pop(task_id, {})


@dataclass
class CheckResult:
    """
    검증 항목 하나의 결과

    measured와 bound는 로그/원장에 그대로 기록되며, passed가 False인 항목이 하나라도
    있으면 CLI 종료 코드는 1입니다.
    """

    name: str
    passed: bool
    measured: float = 0.0
    bound: float = 0.0
    detail: str = ""

    def as_row(self):
        return {
            "check": self.name,
            "passed": bool(self.passed),
            "measured": float(self.measured),
            "bound": float(self.bound),
            "detail": self.detail,
        }

    def log(self):
        mark = "✅" if self.passed else "❌"
        logging.info(f"{mark} {self.name}: 측정값 {self.measured:.6e}, 기준 {self.bound:.6e} {self.detail}".rstrip())
        return self
