"""
흐름 적분 테스트

부피 보존 (corrected 확장), 압축장 대조군, 정지 없음, 영역 이탈 오류, RK4 수렴 차수를 확인합니다.
"""

import math
import os
import sys

import numpy as np

# 현재 디렉토리를 Python 경로에 추가
sys.path.insert(0, os.path.dirname(__file__))

from modules.fields import (
    CutoffProfile,
    TangentField,
    compressive_field,
    default_band,
    extend_field,
    reversing_field,
    rotation_field,
    stirring_field,
)
from modules.flow import (
    FlowDomainError,
    band_tracer,
    concatenate,
    integrate_isotopy,
    never_stops,
    sample_particles,
    volume_defect,
)
from modules.geometry import make_flat_strip, make_torus, tubular_chart
from modules.massflow import circle_map_for


def _torus_ambient(turns=1, delta=0.05):
    torus = make_torus(2.0, 1.0)
    field = stirring_field(torus, default_band(torus), turns)
    chart = tubular_chart(torus, delta)
    return extend_field(field, chart, CutoffProfile(delta), "corrected")


def test_volume_preserved_in_torus_tube():
    """N ∈ {1, 2, 4, 8}, K = 512·N: 부피 결손 ≤ 1e-6"""
    for turns in (1, 2, 4, 8):
        ambient = _torus_ambient(turns)
        particles = sample_particles(ambient.surface, 24, seed=1, delta=0.05, tracer=band_tracer(ambient))
        steps = 512 * turns
        iso = integrate_isotopy(ambient, particles, steps)
        defect = volume_defect(iso)
        print(f"  N={turns}, K={steps}: 부피 결손 {defect:.3e}")
        assert defect <= 1e-6
        assert iso.points.shape == (steps + 1, 25, 3)


def test_volume_preserved_on_flat_strip():
    strip = make_flat_strip(1.0, 1.0)
    field = stirring_field(strip, default_band(strip), 2)
    ambient = extend_field(field, tubular_chart(strip, 0.1), CutoffProfile(0.1))
    particles = sample_particles(strip, 32, seed=4, delta=0.1)
    iso = integrate_isotopy(ambient, particles, 256)
    assert volume_defect(iso) <= 1e-9


def test_compressive_negative_control():
    """−x∂_x: det = e^{−t}, 결손 |e^{−1} − 1| ≈ 0.632"""
    particles = np.random.default_rng(3).uniform(0.0, 1.0, size=(10, 3))
    iso = integrate_isotopy(compressive_field(), particles, 512)
    defect = volume_defect(iso)
    print(f"  압축장 결손 {defect:.6f}")
    assert abs(defect - (1.0 - math.exp(-1.0))) <= 1e-6


def test_never_stops_for_stirring():
    torus = make_torus(2.0, 1.0)
    field = stirring_field(torus, default_band(torus), 1)
    iso = integrate_isotopy(field, band_tracer(field)[None, :], 128, track_jacobian=False)
    passed, margin, min_speed = never_stops(iso, circle_map_for(torus, 0))
    print(f"  증가율 최소 {margin:.4f}, 고원 속도 {field.plateau_speed:.4f}")
    assert passed
    assert margin >= 0.99 * field.plateau_speed


def test_never_stops_negative_controls():
    torus = make_torus(2.0, 1.0)
    circle_map = circle_map_for(torus, 0)
    field = stirring_field(torus, default_band(torus), 1)
    reversing = reversing_field(field)
    iso = integrate_isotopy(reversing, band_tracer(field)[None, :], 128, track_jacobian=False)
    assert not never_stops(iso, circle_map)[0]

    still = stirring_field(torus, default_band(torus), 0)
    iso = integrate_isotopy(still, np.array([[0.0, 3.0]]), 16, track_jacobian=False)
    passed, _, min_speed = never_stops(iso, circle_map)
    assert not passed and min_speed == 0.0


def test_flow_domain_error():
    strip = make_flat_strip(1.0, 1.0)

    def push(u, v):
        return np.ones_like(u), np.zeros_like(u)

    field = TangentField(surface=strip, label="push", components_fn=push)
    try:
        integrate_isotopy(field, np.array([[0.5, 0.5], [0.9, 0.5]]), 64)
    except FlowDomainError as e:
        print(f"  ✅ {e}")
        assert "입자 1" in str(e)
    else:
        raise AssertionError("FlowDomainError가 발생해야 합니다")


def test_lift_safety_step_floor():
    torus = make_torus(2.0, 1.0)
    field = stirring_field(torus, default_band(torus), 4)
    try:
        integrate_isotopy(field, band_tracer(field)[None, :], 128)
    except ValueError as e:
        print(f"  ✅ {e}")
    else:
        raise AssertionError("K < 64·N 이면 거부해야 합니다")


def test_rk4_convergence_order():
    """강체 회전 한 바퀴: K를 두 배로 하면 오차가 2^3.6배 이상 줄어듦"""
    field = rotation_field(2.0 * math.pi)
    start = np.array([[1.0, 0.0, 0.0]])
    errors = []
    for steps in (16, 32):
        iso = integrate_isotopy(field, start, steps, track_jacobian=False)
        errors.append(float(np.linalg.norm(iso.final - start)))
    order = math.log2(errors[0] / errors[1])
    print(f"  오차 {errors}, 차수 {order:.2f}")
    assert order >= 3.6


def test_concatenate_halves():
    torus = make_torus(2.0, 1.0)
    field = stirring_field(torus, default_band(torus), 1)
    start = band_tracer(field)[None, :]
    first = integrate_isotopy(field, start, 64, t0=0.0, t1=0.5)
    second = integrate_isotopy(field, first.final, 64, t0=0.5, t1=1.0)
    joined = concatenate(first, second)
    whole = integrate_isotopy(field, start, 128)
    assert joined.steps == 128
    assert np.max(np.abs(joined.final - whole.final)) <= 1e-12


def test_concatenate_uneven_split():
    """[0, 0.3]과 [0.3, 1]을 같은 시간 간격으로 적분해 이어붙이면 한 번에 적분한 흐름과 같음"""
    torus = make_torus(2.0, 1.0)
    field = stirring_field(torus, default_band(torus), 1)
    start = np.stack([band_tracer(field), band_tracer(field) + np.array([1.0, 0.0])])
    first = integrate_isotopy(field, start, 192, t0=0.0, t1=0.3)
    second = integrate_isotopy(field, first.final, 448, t0=0.3, t1=1.0)
    joined = concatenate(first, second)
    whole = integrate_isotopy(field, start, 640)
    gap = float(np.max(np.abs(joined.final - whole.final)))
    print(f"  끝점 차이 {gap:.3e}")
    assert joined.steps == whole.steps
    assert np.allclose(joined.times, whole.times, rtol=0.0, atol=1e-14)
    assert gap <= 1e-10
    assert np.max(np.abs(joined.jacobian[-1] - whole.jacobian[-1])) <= 1e-9


def main():
    print("=" * 60)
    print("🌊 흐름 적분 테스트")
    print("=" * 60)
    tests = [
        test_volume_preserved_in_torus_tube,
        test_volume_preserved_on_flat_strip,
        test_compressive_negative_control,
        test_never_stops_for_stirring,
        test_never_stops_negative_controls,
        test_flow_domain_error,
        test_lift_safety_step_floor,
        test_rk4_convergence_order,
        test_concatenate_halves,
        test_concatenate_uneven_split,
    ]
    for test in tests:
        print(f"\n▶ {test.__name__}")
        test()
    print("\n" + "=" * 60)
    print("✅ 모든 테스트 통과")
    print("=" * 60)


if __name__ == "__main__":
    main()
