"""
블록 일정과 발산 인증서 테스트

공 배치의 서로소성, 회전 수 선택, 조화 급수 증인 K(B), 인증서 재검증, 붙인 벡터장의 지지를 확인합니다.
"""

import os
import sys
import time
from fractions import Fraction

import mpmath
import numpy as np

# 현재 디렉토리를 Python 경로에 추가
sys.path.insert(0, os.path.dirname(__file__))

from modules.blocks import (
    BlockConstants,
    PackingError,
    ScheduleLengthError,
    TurnRangeError,
    audit_blocks,
    block_coefficient,
    block_lower_bound,
    block_scale,
    build_schedule,
    certify_divergence,
    choose_turns,
    glued_field,
    pack_balls,
    literal_turns,
    verify_certificate,
)
from modules.fields import CutoffProfile, default_band, extend_field, stirring_field
from modules.geometry import make_torus, tubular_chart

# 측정값과 같은 크기의 합성 상수 (테스트 속도를 위해 고정)
CONSTANTS = BlockConstants(delta=0.05, jensen_constant=1.0, volume=8.0, theta_norm=0.5)


def test_pack_balls_disjoint_and_inside():
    balls = pack_balls(80)
    for ball in balls:
        for c in ball.center:
            assert 0 <= c - ball.radius and c + ball.radius <= 1
    for i, first in enumerate(balls):
        for second in balls[i + 1:]:
            gap2 = sum((x - y) ** 2 for x, y in zip(first.center, second.center))
            assert gap2 > (first.radius + second.radius) ** 2
    for first, second in zip(balls[:-1], balls[1:]):
        assert second.radius == first.radius / 4
    assert balls[0].center == (Fraction(1, 2), Fraction(1, 8), Fraction(1, 8))


def test_pack_balls_rejects_bad_parameters():
    for rho0, decay in ((Fraction(1, 4), Fraction(1, 4)), (Fraction(1, 8), Fraction(3, 4)), (0, Fraction(1, 4))):
        try:
            pack_balls(3, rho0, decay)
        except PackingError as e:
            print(f"  ✅ {e}")
        else:
            raise AssertionError(f"PackingError가 발생해야 합니다: ρ₀={rho0}, 감소율={decay}")


def test_choose_turns_is_minimal():
    for j in (1, 2, 7):
        radius = Fraction(1, 8) * Fraction(1, 4) ** (j - 1)
        scale = block_scale(radius)
        turns = choose_turns(j, Fraction(1, j), CONSTANTS, scale)
        with mpmath.workdps(60):
            assert block_lower_bound(scale, turns, CONSTANTS) >= mpmath.mpf(1) / j
            assert block_lower_bound(scale, turns - 1, CONSTANTS) < mpmath.mpf(1) / j
        print(f"  j={j}: N={turns}")
    assert choose_turns(1, 0, CONSTANTS, block_scale(Fraction(1, 8))) == 1


def test_choose_turns_exact_for_deep_blocks():
    """N(83)은 100자리가 넘어도 빠르고 정확히 최소"""
    radius = Fraction(1, 8) * Fraction(1, 4) ** 82
    scale = block_scale(radius)
    assert scale == radius / 8
    started = time.perf_counter()
    turns = choose_turns(83, Fraction(1, 83), CONSTANTS, scale)
    elapsed = time.perf_counter() - started
    coefficient = scale ** 5 * Fraction(0.05) * Fraction(1.0) / 2
    assert block_coefficient(scale, CONSTANTS) == coefficient
    assert coefficient * turns ** 2 >= Fraction(1, 83)
    assert coefficient * (turns - 1) ** 2 < Fraction(1, 83)
    print(f"  N(83) 자릿수 {len(str(turns))}, {elapsed * 1000:.2f} ms")
    assert len(str(turns)) > 100
    assert elapsed < 1.0

    for j in range(40, 46):
        radius = Fraction(1, 8) * Fraction(1, 4) ** (j - 1)
        turns = choose_turns(j, Fraction(1, j), CONSTANTS, block_scale(radius))
        coefficient = block_coefficient(block_scale(radius), CONSTANTS)
        assert coefficient * turns ** 2 >= Fraction(1, j) > coefficient * (turns - 1) ** 2


def test_turn_range_error():
    tiny = BlockConstants(delta=0.05, jensen_constant=1e-300)
    try:
        choose_turns(1, 1, tiny, block_scale(Fraction(1, 8) * Fraction(1, 8) ** 20000))
    except TurnRangeError as e:
        print(f"  ✅ {e}")
    else:
        raise AssertionError("TurnRangeError가 발생해야 합니다")


def test_literal_turns():
    """ρ=1/4, δ=1/32, j=1 → 4096·32 = 131072"""
    assert literal_turns(1, Fraction(1, 4), Fraction(1, 32)) == 131072
    assert literal_turns(4, Fraction(1, 4), Fraction(1, 32)) == 65536


def test_certificate_witnesses():
    """목표 1/j: S_K ≥ H_K, K(1)=1, K(2)=4, K(5)=83"""
    certificate = certify_divergence(CONSTANTS, [1, 2, 5])
    print(f"  증인 {certificate.witnesses}, 검사한 블록 {certificate.blocks_examined}")
    assert certificate.witnesses == {"1": 1, "2": 4, "5": 83}
    assert certificate.harmonic_dominance
    assert certificate.exponent == 5
    passed, failures = verify_certificate(certificate.as_dict())
    assert passed, failures


def test_tampered_certificate_fails():
    data = certify_divergence(CONSTANTS, [2]).as_dict()
    data["witnesses"] = {"2": 3}
    passed, failures = verify_certificate(data)
    print(f"  실패 사유 {failures}")
    assert not passed


def test_schedule_length_error():
    try:
        certify_divergence(CONSTANTS, [5], max_blocks=20)
    except ScheduleLengthError as e:
        print(f"  ✅ {e}")
    else:
        raise AssertionError("ScheduleLengthError가 발생해야 합니다")


def test_paper_mode_needs_more_turns():
    derived = build_schedule(3, CONSTANTS, mode="derived")
    paper = build_schedule(3, CONSTANTS, mode="paper")
    for d, p in zip(derived.terms, paper.terms):
        assert p.turns > d.turns
        assert float(d.delta) < float(d.radius) / 4
    assert len(derived.frame_rows()) == 3


def test_glued_field_support():
    torus = make_torus(2.0, 1.0)
    field = stirring_field(torus, default_band(torus), 1)
    canonical = extend_field(field, tubular_chart(torus, 0.05), CutoffProfile(0.05))
    schedule = build_schedule(2, CONSTANTS)
    glued = glued_field(canonical, schedule)
    outside = np.array([[0.9, 0.9, 0.9], [0.05, 0.9, 0.5], [0.5, 0.125, 0.9]])
    assert np.all(glued(outside) == 0.0)

    ball = schedule.balls[0]
    scale = float(schedule.terms[0].scale)
    local = canonical.chart.map(np.array([0.5]), np.array([3.0]), np.array([0.0]))
    point = ball.center_float + scale * local
    value = glued(point)
    expected = scale * schedule.terms[0].turns * canonical(local)
    assert np.allclose(value, expected, rtol=1e-12, atol=0.0)
    assert np.linalg.norm(value) > 0.0


def test_audit_blocks_keeps_order():
    rows = audit_blocks(range(6), lambda j: {"block_id": j, "square": j * j}, workers=3)
    assert [r["block_id"] for r in rows] == list(range(6))


def main():
    print("=" * 60)
    print("🧱 블록 일정 / 인증서 테스트")
    print("=" * 60)
    tests = [
        test_pack_balls_disjoint_and_inside,
        test_pack_balls_rejects_bad_parameters,
        test_choose_turns_is_minimal,
        test_choose_turns_exact_for_deep_blocks,
        test_turn_range_error,
        test_literal_turns,
        test_certificate_witnesses,
        test_tampered_certificate_fails,
        test_schedule_length_error,
        test_paper_mode_needs_more_turns,
        test_glued_field_support,
        test_audit_blocks_keeps_order,
    ]
    for test in tests:
        print(f"\n▶ {test.__name__}")
        test()
    print("\n" + "=" * 60)
    print("✅ 모든 테스트 통과")
    print("=" * 60)


if __name__ == "__main__":
    main()
