"""
블록 모듈 - 가산 블록 일정 (공 배치, 닮음비, 회전 수)과 총 작용 발산 인증서

블록 j는 표준 블록(반지름 R 공 안의 교반 관상 근방)을 닮음비 λ_j = ρ_j/(2R)로 줄여
공 B_{ρ_j}(x_j)에 넣은 것입니다. 블록 하한은
    L_j = λ_j^e · ½δ^{n−m} · c · N(j)²,   c = (Vol/2)·‖θ̃₁‖²
이고, N(j)를 목표 1/j에 맞춰 고르면 부분합 S_K ≥ H_K → ∞ 입니다.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List

import mpmath
import numpy as np

import config
from modules.energy import scaling_exponent

# 인증서가 배치를 정확히 검사하는 앞 블록 수
PAIRWISE_AUDIT = 64


class PackingError(ValueError):
    """공이 겹치거나 단위 정육면체를 벗어나는 경우"""


class TurnRangeError(ValueError):
    """목표를 만족하는 회전 수가 허용 정수 범위를 넘는 경우"""


class ScheduleLengthError(ValueError):
    """K_max 블록 안에서 요청한 하한에 도달하지 못한 경우"""


# =============================================================================
# 공 배치
# =============================================================================
@dataclass
class Ball:
    index: int
    center: tuple
    radius: Fraction

    @property
    def center_float(self):
        return np.array([float(c) for c in self.center])


def _mpf(value):
    """Fraction을 포함한 수를 mpmath 수로 바꿉니다."""
    if isinstance(value, Fraction):
        return mpmath.mpf(value.numerator) / value.denominator
    return mpmath.mpf(value)


def _as_fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value).limit_denominator(1 << 20)


def pack_balls(count, base_radius=Fraction(1, 8), decay=Fraction(1, 4)):
    """
    I³ = [0, 1]³ 의 한 모서리를 따라 기하급수적으로 작아지는 공을 배치합니다.

    ρ_j = ρ₀·decay^{j−1}, x_j = (4ρ_j, ρ_j, ρ_j). 중심은 원점 꼭짓점으로 모이고
    (경계에서만 집적), 서로소성과 포함 관계를 유리수로 정확히 검사합니다.

    Raises:
        PackingError: 전제 조건 위반, 겹침, 정육면체 이탈 (블록 번호 포함)
    """
    rho0 = _as_fraction(base_radius)
    ratio = _as_fraction(decay)
    if count < 1:
        raise PackingError(f"블록 수는 1 이상이어야 합니다: {count}")
    if not 0 < rho0 <= Fraction(1, 8):
        raise PackingError(f"ρ₀는 (0, 1/8] 범위여야 합니다: {rho0}")
    if not Fraction(1, 8) <= ratio <= Fraction(1, 2):
        raise PackingError(f"감소율은 [1/8, 1/2] 범위여야 합니다 (ρ_j → 0 필요): {ratio}")

    balls = []
    radius = rho0
    for j in range(1, count + 1):
        center = (4 * radius, radius, radius)
        for axis, c in enumerate(center):
            if c - radius < 0 or c + radius > 1:
                raise PackingError(f"블록 {j}의 공이 I³를 벗어납니다 (축 {axis})")
        balls.append(Ball(index=j, center=center, radius=radius))
        radius = radius * ratio

    def separated(a, b):
        gap2 = sum((x - y) ** 2 for x, y in zip(a.center, b.center))
        return gap2 > (a.radius + b.radius) ** 2

    for i, first in enumerate(balls):
        for second in balls[i + 1:]:
            if not separated(first, second):
                raise PackingError(f"블록 {first.index}과 {second.index}의 공이 겹칩니다")

    logging.info(f"✅ 공 배치 완료: {count}개, ρ₀={rho0}, 감소율 {ratio}")
    return balls


# =============================================================================
# 블록 상수, 회전 수, 하한
# =============================================================================
@dataclass
class BlockConstants:
    """
    표준 블록에서 측정한 상수

    jensen_constant c = (Vol/2)‖θ̃₁‖² 는 N=1 교반장의 곡면 에너지 하한입니다.
    """

    delta: float
    jensen_constant: float
    ball_radius: float = config.DEFAULT_BALL_RADIUS
    dimension: int = 3
    surface_dimension: int = 2
    unit_energy: float = 0.0
    volume: float = 0.0
    theta_norm: float = 0.0

    @property
    def codimension(self):
        return self.dimension - self.surface_dimension

    def unit_bound(self):
        """½δ^{n−m}·c (mpmath)"""
        with mpmath.workdps(config.CERTIFICATE_DPS):
            return mpmath.mpf(self.delta) ** self.codimension * mpmath.mpf(self.jensen_constant) / 2

    def as_dict(self):
        return {
            "delta": self.delta,
            "jensen_constant": self.jensen_constant,
            "ball_radius": self.ball_radius,
            "dimension": self.dimension,
            "surface_dimension": self.surface_dimension,
            "unit_energy": self.unit_energy,
            "volume": self.volume,
            "theta_norm": self.theta_norm,
        }


def block_scale(radius, ball_radius=config.DEFAULT_BALL_RADIUS):
    """λ_j = ρ_j/(2R) (정확한 유리수)"""
    return _as_fraction(radius) / (2 * _exact(ball_radius))


def _exact(value):
    """부동소수점 값도 반올림 없이 그대로 유리수로 옮깁니다."""
    if isinstance(value, (Fraction, int, float)):
        return Fraction(value)
    return _as_fraction(value)


def block_coefficient(scale, constants, mode="derived"):
    """
    λ^e · ½δ^{n−m} · c 를 유리수로 정확히 계산합니다 (N=1 블록 하한).
    """
    exponent = scaling_exponent(mode, constants.dimension)
    return (_exact(scale) ** exponent * _exact(constants.delta) ** constants.codimension
            * _exact(constants.jensen_constant) / 2)


def block_lower_bound(scale, turns, constants, mode="derived"):
    """
    L_j = λ^e · ½δ^{n−m} · c · N²

    Args:
        scale: λ_j
        turns: N(j) (정수)
        constants: BlockConstants
        mode: "derived" (e = n+2) 또는 "paper" (e = 2n)
    """
    with mpmath.workdps(config.CERTIFICATE_DPS):
        return _mpf(block_coefficient(scale, constants, mode) * int(turns) ** 2)


def choose_turns(j, target, constants, scale, mode="derived"):
    """
    λ^e·½δ^{n−m}·c·N² ≥ target 을 만족하는 최소 양의 정수 N

    계수와 목표를 유리수로 두고 정수 제곱근으로 구하므로 N의 자릿수와 무관하게 정확합니다.

    Raises:
        TurnRangeError: N의 비트 수가 MAX_TURN_BITS를 넘거나 계수가 0인 경우
    """
    goal = _exact(target)
    if goal <= 0:
        return 1
    coefficient = block_coefficient(scale, constants, mode)
    if coefficient <= 0:
        raise TurnRangeError(f"블록 {j}: 블록 계수가 0입니다 (c={constants.jensen_constant})")
    # N² · denominator ≥ numerator 인 최소 N
    ratio = goal / coefficient
    numerator, denominator = ratio.numerator, ratio.denominator
    if numerator > denominator << (2 * config.MAX_TURN_BITS):
        bits = (numerator.bit_length() - denominator.bit_length()) / 2
        raise TurnRangeError(
            f"블록 {j}: 필요한 회전 수 ≈ 2^{bits:.1f}가 "
            f"허용 범위 2^{config.MAX_TURN_BITS}를 넘습니다. ρ₀ 또는 감소율을 키우세요"
        )
    turns = max(1, math.isqrt(numerator // denominator))
    while turns * turns * denominator < numerator:
        turns += 1
    while turns > 1 and (turns - 1) ** 2 * denominator >= numerator:
        turns -= 1
    return turns


def literal_turns(j, radius, tube_delta, dimension=3, surface_dimension=2):
    """
    ⌈j^{−1/2}·ρ_j^{−2n}·δ_j^{m−n}⌉ 을 정수 연산으로 정확히 계산합니다.
    """
    value = _as_fraction(radius) ** (-2 * dimension) * _as_fraction(tube_delta) ** (surface_dimension - dimension)
    # N² · j ≥ value² 인 최소 N
    numerator = value.numerator ** 2
    denominator = value.denominator ** 2 * j
    turns = math.isqrt(-(-numerator // denominator))
    while turns * turns * denominator < numerator:
        turns += 1
    while turns > 0 and (turns - 1) ** 2 * denominator >= numerator:
        turns -= 1
    return turns


# =============================================================================
# 일정과 인증서
# =============================================================================
@dataclass
class BlockTerm:
    index: int
    radius: Fraction
    scale: object
    delta: object
    turns: int
    bound: object

    def as_row(self, exact=True):
        with mpmath.workdps(config.CERTIFICATE_DPS):
            return {
                "block_id": self.index,
                "rho": str(self.radius),
                "lambda": mpmath.nstr(_mpf(self.scale), 20),
                "delta": mpmath.nstr(self.delta, 20),
                "N": str(self.turns) if exact else f"2^{self.turns.bit_length() - 1}+",
                "N_bits": self.turns.bit_length(),
                "L": mpmath.nstr(self.bound, 25),
            }


@dataclass
class BlockSchedule:
    """블록별 (x_j, ρ_j, λ_j, δ_j, N(j), L_j)"""

    balls: List[Ball]
    terms: List[BlockTerm]
    constants: BlockConstants
    mode: str

    def frame_rows(self):
        rows = []
        for ball, term in zip(self.balls, self.terms):
            row = term.as_row(exact=term.index <= config.CERTIFICATE_TABLE_BLOCKS)
            row.update({"x": str(ball.center[0]), "y": str(ball.center[1]), "z": str(ball.center[2])})
            rows.append(row)
        return rows


def harmonic_target(j):
    return Fraction(1, j)


def _term(j, radius, constants, mode, target):
    scale = block_scale(radius, constants.ball_radius)
    turns = choose_turns(j, target(j), constants, scale, mode)
    with mpmath.workdps(config.CERTIFICATE_DPS):
        delta = _mpf(scale) * mpmath.mpf(constants.delta)
    bound = block_lower_bound(scale, turns, constants, mode)
    return BlockTerm(index=j, radius=radius, scale=scale, delta=delta, turns=turns, bound=bound)


def build_schedule(count, constants, base_radius=Fraction(1, 8), decay=Fraction(1, 4), mode="derived",
                   target=harmonic_target):
    """공 배치 + 회전 수 선택"""
    balls = pack_balls(count, base_radius, decay)
    terms = [_term(ball.index, ball.radius, constants, mode, target) for ball in balls]
    logging.info(f"✅ 블록 일정 생성: {count}개 블록, 모드 {mode}, N(1)={terms[0].turns}")
    return BlockSchedule(balls=balls, terms=terms, constants=constants, mode=mode)


@dataclass
class DivergenceCertificate:
    """부분합 S_K가 요청한 모든 하한 B를 넘는다는 기록"""

    mode: str
    exponent: int
    parameters: Dict
    constants: Dict
    witnesses: Dict[str, int]
    terms: List[Dict]
    partial_sums: List[Dict]
    harmonic_dominance: bool
    blocks_examined: int
    config_hash: str = ""
    audit: List[Dict] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def as_dict(self):
        return {
            "schema_version": config.SCHEMA_VERSION,
            "tool_version": config.TOOL_VERSION,
            "config_hash": self.config_hash,
            "mode": self.mode,
            "exponent": self.exponent,
            "parameters": self.parameters,
            "constants": self.constants,
            "witnesses": self.witnesses,
            "harmonic_dominance": self.harmonic_dominance,
            "blocks_examined": self.blocks_examined,
            "terms": self.terms,
            "partial_sums": self.partial_sums,
            "audit": self.audit,
            "notes": self.notes,
        }


def certify_divergence(constants, bounds, base_radius=Fraction(1, 8), decay=Fraction(1, 4), mode="derived",
                       max_blocks=None, target=harmonic_target, config_hash=""):
    """
    S_K = Σ_{j≤K} L_j 를 차례로 더해 각 하한 B의 최소 K(B)를 찾습니다.

    j번째 블록 항은 닮음 법칙으로 계산합니다 (블록은 표준 블록의 닮은 복사본).

    Raises:
        ScheduleLengthError: K_max 블록 안에 어떤 B에 도달하지 못한 경우
    """
    max_blocks = max_blocks or config.DEFAULT_MAX_BLOCKS
    bounds = sorted(float(b) for b in bounds)
    rho0, ratio = _as_fraction(base_radius), _as_fraction(decay)
    pack_balls(min(max_blocks, PAIRWISE_AUDIT), rho0, ratio)

    witnesses, terms, partial_rows = {}, [], []
    harmonic_ok = True
    pending = list(bounds)
    radius = rho0
    j = 0
    with mpmath.workdps(config.CERTIFICATE_DPS):
        total = mpmath.mpf(0)
        harmonic = mpmath.mpf(0)
        while pending and j < max_blocks:
            j += 1
            term = _term(j, radius, constants, mode, target)
            total += term.bound
            harmonic += mpmath.mpf(1) / j
            if total < harmonic * (1 - mpmath.mpf(10) ** (-40)):
                harmonic_ok = False
            reached = [b for b in pending if total >= b]
            if j <= config.CERTIFICATE_TABLE_BLOCKS:
                terms.append(term.as_row(exact=True))
            if j <= config.CERTIFICATE_TABLE_BLOCKS or reached:
                partial_rows.append({"K": j, "S_K": mpmath.nstr(total, 30), "H_K": mpmath.nstr(harmonic, 30)})
            for b in reached:
                witnesses[_bound_key(b)] = j
                logging.info(f"📊 하한 B={b:g} 도달: K={j}, S_K={mpmath.nstr(total, 15)}")
                pending.remove(b)
            radius = radius * ratio

    if pending:
        raise ScheduleLengthError(
            f"일정 길이 부족: {max_blocks}개 블록 안에 하한 {pending}에 도달하지 못했습니다 "
            f"(S_K={mpmath.nstr(total, 15)})"
        )

    certificate = DivergenceCertificate(
        mode=mode,
        exponent=scaling_exponent(mode, constants.dimension),
        parameters={
            "base_radius": str(rho0),
            "decay": str(ratio),
            "ball_radius": constants.ball_radius,
            "max_blocks": max_blocks,
            "bounds": bounds,
            "target": "1/j",
        },
        constants=constants.as_dict(),
        witnesses=witnesses,
        terms=terms,
        partial_sums=partial_rows,
        harmonic_dominance=harmonic_ok,
        blocks_examined=j,
        config_hash=config_hash,
        notes=[
            "유한 에너지 동반 등위상의 존재는 인용된 결과이며 계산하지 않습니다.",
            f"N(j)는 처음 {config.CERTIFICATE_TABLE_BLOCKS}개 블록만 정확한 정수로 기록합니다.",
        ],
    )
    logging.info(f"✅ 발산 인증서 생성: 모드 {mode}, 증인 {witnesses}, 검사한 블록 {j}개")
    return certificate


def _bound_key(bound):
    return f"{bound:g}"


def verify_certificate(certificate):
    """
    인증서의 매개변수와 상수로 부분합을 다시 계산해 모든 (B, K(B))를 확인합니다.

    Returns:
        (passed, 실패 사유 목록)
    """
    data = certificate.as_dict() if isinstance(certificate, DivergenceCertificate) else certificate
    constants = BlockConstants(**data["constants"])
    params = data["parameters"]
    rho0, ratio = _as_fraction(params["base_radius"]), _as_fraction(params["decay"])
    witnesses = {float(k): int(v) for k, v in data["witnesses"].items()}
    failures = []
    if not witnesses:
        return False, ["증인이 없습니다"]

    last = max(witnesses.values())
    radius = rho0
    sums = {}
    with mpmath.workdps(config.CERTIFICATE_DPS):
        total = mpmath.mpf(0)
        for j in range(1, last + 1):
            total += _term(j, radius, constants, data["mode"], harmonic_target).bound
            sums[j] = +total
            radius = radius * ratio
        for bound, k in sorted(witnesses.items()):
            if sums[k] < bound:
                failures.append(f"B={bound:g}: S_{k}={mpmath.nstr(sums[k], 15)} < B")
            if k > 1 and sums[k - 1] >= bound:
                failures.append(f"B={bound:g}: K={k}이 최소가 아닙니다")
    return not failures, failures


# =============================================================================
# 붙인 벡터장 (I³ 위의 ξ_t)
# =============================================================================
@dataclass
class GluedField:
    """
    각 공 B_j에 λ_j·N_j·Ṽ₁((x − x_j)/λ_j) 를 두고 나머지는 0인 벡터장

    canonical은 표준 블록의 N=1 확장장 (AmbientField)입니다.
    """

    canonical: object
    centers: List[np.ndarray]
    scales: List[float]
    turns: List[int]
    radii: List[float]

    def __call__(self, points, t=0.0):
        points = np.asarray(points, dtype=float)
        out = np.zeros(points.shape)
        for center, scale, turns, radius in zip(self.centers, self.scales, self.turns, self.radii):
            offset = points - center
            inside = np.linalg.norm(offset, axis=-1) < radius
            if np.any(inside):
                local = offset[inside] / scale
                out[inside] += scale * turns * self.canonical(local, t)
        return out


def glued_field(canonical, schedule, count=None):
    """블록 일정의 앞 count개 블록으로 붙인 벡터장"""
    count = count or len(schedule.terms)
    centers, scales, turns, radii = [], [], [], []
    for ball, term in list(zip(schedule.balls, schedule.terms))[:count]:
        centers.append(ball.center_float)
        scales.append(float(term.scale))
        turns.append(term.turns)
        radii.append(float(ball.radius))
    return GluedField(canonical=canonical, centers=centers, scales=scales, turns=turns, radii=radii)


def audit_blocks(indices, audit_one, workers=1):
    """
    앞 블록들의 직접 구적 검사를 병렬로 실행하고 블록 번호 순서로 모읍니다.

    Args:
        indices: 블록 번호 목록
        audit_one: 블록 번호 → 결과 dict
        workers: 스레드 수
    """
    if workers <= 1:
        return [audit_one(j) for j in indices]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(audit_one, indices))
