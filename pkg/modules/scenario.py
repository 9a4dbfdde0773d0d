"""
시나리오 설정 모듈

시나리오 파일은 `key=value` 평문이며 python-dotenv로 읽습니다. 알 수 없는 키는 거부하고,
값은 형식 변환 후 각 모듈의 전제 조건으로 검사합니다.
"""
import io
import logging
import math
import os
from dataclasses import MISSING, asdict, dataclass, fields, replace
from dataclasses import field as dataclass_field
from fractions import Fraction
from typing import List, Optional

from dotenv import dotenv_values

import config
from modules.utils import canonical_hash


class ScenarioError(ValueError):
    """시나리오 설정이 전제 조건을 위반한 경우"""


@dataclass
class Scenario:
    # 곡면
    surface: str = "torus_revolution"
    major_radius: float = 2.0
    minor_radius: float = 1.0
    vertical_radius: float = 0.8
    level: str = "squashed_torus"
    length_u: float = 1.0
    length_v: float = 1.0
    inner_radius: float = 1.0
    outer_radius: float = 2.0
    radius: float = 1.0
    # 벡터장
    field: str = "stirring"
    profile: str = "bump"
    band_lo: Optional[float] = None
    band_hi: Optional[float] = None
    ramp: Optional[float] = None
    angular_speed: float = config.DEFAULT_ANGULAR_SPEED
    turns: int = 1
    # 관상 근방
    delta: float = 0.05
    extension_mode: str = "corrected"
    # 구적, 적분
    resolution: int = config.DEFAULT_RESOLUTION
    flow_resolution: int = 32
    audit_resolution: int = 32
    normal_nodes: int = config.NORMAL_NODES_PER_PIECE
    particles: int = 64
    steps_per_turn: int = config.STEPS_PER_TURN
    samples: int = 10000
    trajectory_particles: int = 16
    # 블록 일정
    blocks: int = 3
    rho0: str = "1/8"
    decay: str = "1/4"
    ball_radius: float = config.DEFAULT_BALL_RADIUS
    exponent_mode: str = "derived"
    bounds: List[float] = dataclass_field(default_factory=lambda: list(config.DEFAULT_BOUNDS))
    max_blocks: int = config.DEFAULT_MAX_BLOCKS
    audited_blocks: int = config.AUDITED_BLOCKS
    # 실행
    seed: int = config.DEFAULT_SEED
    output: str = config.OUTPUT_FOLDER
    workers: int = 1

    def surface_params(self):
        return {
            "major_radius": self.major_radius,
            "minor_radius": self.minor_radius,
            "vertical_radius": self.vertical_radius,
            "level": self.level,
            "length_u": self.length_u,
            "length_v": self.length_v,
            "inner_radius": self.inner_radius,
            "outer_radius": self.outer_radius,
            "radius": self.radius,
        }

    def fingerprint(self):
        """출력 폴더와 작업자 수를 뺀 설정 해시 (결과에 영향을 주는 값만)"""
        payload = asdict(self)
        payload.pop("output")
        payload.pop("workers")
        return canonical_hash(payload)


_TYPES = {f.name: f for f in fields(Scenario)}


def _convert(key, raw):
    spec = _TYPES[key]
    default = None if spec.default is MISSING else spec.default
    annotation = str(spec.type)
    text = raw.strip()
    try:
        if key == "bounds":
            return [float(item) for item in text.split(",") if item.strip()]
        if text.lower() in ("", "none") and "Optional" in annotation:
            return None
        if key in ("rho0", "decay"):
            return str(Fraction(text))
        if "float" in annotation:
            value = float(text)
            if not math.isfinite(value):
                raise ValueError(text)
            return value
        if "int" in annotation:
            return int(text)
        return text
    except ValueError:
        raise ScenarioError(f"설정 값 형식 오류: {key}={raw!r} (기본값 예: {default!r})") from None


def parse_scenario_text(text, overrides=None):
    """key=value 텍스트를 Scenario로 변환합니다."""
    values = dotenv_values(stream=io.StringIO(text))
    return _build(values, overrides)


def load_scenario(path=None, overrides=None):
    """
    시나리오 파일을 읽고 CLI 덮어쓰기 값을 적용한 뒤 검사합니다.

    Args:
        path: 시나리오 파일 경로 (None이면 기본값만 사용)
        overrides: {키: 값} (None 값은 무시)

    Returns:
        Scenario

    Raises:
        ScenarioError: 파일 없음, 알 수 없는 키, 형식 오류, 전제 조건 위반
    """
    values = {}
    if path is not None:
        if not os.path.exists(path):
            raise ScenarioError(f"시나리오 파일을 찾을 수 없습니다: {path}")
        values = dotenv_values(path)
        logging.info(f"📋 시나리오 로드: {path} ({len(values)}개 항목)")
    return _build(values, overrides)


def _build(values, overrides):
    kwargs = {}
    for key, raw in values.items():
        name = key.strip().lower()
        if name not in _TYPES:
            raise ScenarioError(f"알 수 없는 설정 키: {key} (SCENARIO_CONFIG_GUIDE.md 참고)")
        if raw is None:
            raise ScenarioError(f"설정 키에 값이 없습니다: {key}")
        kwargs[name] = _convert(name, raw)
    scenario = Scenario(**kwargs)
    if overrides:
        scenario = replace(scenario, **{k: v for k, v in overrides.items() if v is not None})
    return validate_scenario(scenario)


def validate_scenario(scenario):
    """모듈 전제 조건 검사"""
    checks = [
        (scenario.surface in config.AVAILABLE_SURFACE_KINDS,
         f"surface는 {config.AVAILABLE_SURFACE_KINDS} 중 하나여야 합니다: {scenario.surface}"),
        (scenario.level in config.AVAILABLE_IMPLICIT_LEVELS,
         f"level은 {config.AVAILABLE_IMPLICIT_LEVELS} 중 하나여야 합니다: {scenario.level}"),
        (scenario.field in config.AVAILABLE_FIELD_KINDS,
         f"field는 {config.AVAILABLE_FIELD_KINDS} 중 하나여야 합니다: {scenario.field}"),
        (scenario.profile in config.AVAILABLE_PROFILES,
         f"profile은 {config.AVAILABLE_PROFILES} 중 하나여야 합니다: {scenario.profile}"),
        (scenario.extension_mode in config.AVAILABLE_EXTENSION_MODES,
         f"extension_mode는 {config.AVAILABLE_EXTENSION_MODES} 중 하나여야 합니다: {scenario.extension_mode}"),
        (scenario.exponent_mode in config.AVAILABLE_EXPONENT_MODES,
         f"exponent_mode는 {config.AVAILABLE_EXPONENT_MODES} 중 하나여야 합니다: {scenario.exponent_mode}"),
        (scenario.turns >= 0, f"turns는 0 이상이어야 합니다: {scenario.turns}"),
        (scenario.delta > 0.0, f"delta는 양수여야 합니다: {scenario.delta}"),
        (scenario.resolution >= config.MIN_PERIODIC_NODES,
         f"resolution은 {config.MIN_PERIODIC_NODES} 이상이어야 합니다: {scenario.resolution}"),
        (scenario.flow_resolution >= config.MIN_PERIODIC_NODES,
         f"flow_resolution은 {config.MIN_PERIODIC_NODES} 이상이어야 합니다: {scenario.flow_resolution}"),
        (scenario.audit_resolution >= config.MIN_PERIODIC_NODES,
         f"audit_resolution은 {config.MIN_PERIODIC_NODES} 이상이어야 합니다: {scenario.audit_resolution}"),
        (scenario.steps_per_turn >= config.MIN_STEPS_PER_TURN,
         f"steps_per_turn은 {config.MIN_STEPS_PER_TURN} 이상이어야 합니다 (올림 안전): {scenario.steps_per_turn}"),
        (scenario.particles >= 1 and scenario.samples >= 1, "particles와 samples는 1 이상이어야 합니다"),
        (scenario.blocks >= 1, f"blocks는 1 이상이어야 합니다: {scenario.blocks}"),
        (Fraction(1, 8) >= Fraction(scenario.rho0) > 0, f"rho0는 (0, 1/8] 범위여야 합니다: {scenario.rho0}"),
        (Fraction(1, 8) <= Fraction(scenario.decay) <= Fraction(1, 2),
         f"decay는 [1/8, 1/2] 범위여야 합니다: {scenario.decay}"),
        (len(scenario.bounds) > 0 and all(b > 0 for b in scenario.bounds),
         f"bounds는 양수 목록이어야 합니다: {scenario.bounds}"),
        (scenario.max_blocks >= 1, f"max_blocks는 1 이상이어야 합니다: {scenario.max_blocks}"),
        (scenario.audited_blocks >= 0, f"audited_blocks는 0 이상이어야 합니다: {scenario.audited_blocks}"),
        (scenario.workers >= 1, f"workers는 1 이상이어야 합니다: {scenario.workers}"),
    ]
    for ok, message in checks:
        if not ok:
            raise ScenarioError(message)
    return scenario


def dump_scenario(scenario):
    """정렬된 key=value 줄 (parse → dump → parse 가 항등)"""
    lines = []
    for key, value in sorted(asdict(scenario).items()):
        if value is None:
            continue
        if key == "bounds":
            text = ",".join(repr(float(b)) for b in value)
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key}={text}")
    return "\n".join(lines) + "\n"
