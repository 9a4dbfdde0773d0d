"""
질량 흐름 테스트

흐름 적분으로 얻은 θ̃와 플럭스 쌍대의 일치, N에 대한 선형성, 올림 안전 조건, Jensen 사슬을 확인합니다.
"""

import math
import os
import sys

import numpy as np

# 현재 디렉토리를 Python 경로에 추가
sys.path.insert(0, os.path.dirname(__file__))

from modules.energy import kinetic_energy
from modules.fields import default_band, stirring_field
from modules.flow import concatenate, integrate_isotopy
from modules.geometry import build_quadrature, make_flat_annulus, make_flat_strip, make_torus
from modules.massflow import (
    LiftSafetyError,
    circle_map_for,
    df_l2_norm,
    duality_check,
    flux_pairing,
    jensen_chain,
    mass_flow,
    measure_winding,
    normalized_mass_flow,
)
from modules.reference import annulus_values


def _mesh_particles(mesh):
    return np.stack([mesh.u, mesh.v], axis=-1)


def test_rigid_annulus_mass_flow():
    """θ̃ = ω·넓이 = 3π"""
    annulus = make_flat_annulus(1.0, 2.0)
    band = default_band(annulus, "rigid")
    field = stirring_field(annulus, band, 1, angular_speed=1.0)
    mesh = build_quadrature(annulus, 16)
    circle_map = circle_map_for(annulus, band.loop_axis)
    iso = integrate_isotopy(field, _mesh_particles(mesh), 64, track_jacobian=False)
    theta = mass_flow(iso, circle_map, mesh.weights)
    flux = flux_pairing(field, circle_map, mesh)
    print(f"  θ̃ = {theta.value:.12f}, flux = {flux:.12f}, 기준 {3.0 * math.pi:.12f}")
    assert abs(theta.value - 3.0 * math.pi) <= 1e-9
    assert abs(flux - 3.0 * math.pi) <= 1e-6


def test_torus_duality_and_linearity():
    torus = make_torus(2.0, 1.0)
    band = default_band(torus)
    base = stirring_field(torus, band, 1)
    mesh = build_quadrature(torus, 32)
    circle_map = circle_map_for(torus, band.loop_axis)
    values = {}
    for turns in (1, 2, 4, 8):
        field = base.scaled(float(turns))
        iso = integrate_isotopy(field, _mesh_particles(mesh), 512 * turns, track_jacobian=False)
        values[turns] = mass_flow(iso, circle_map, mesh.weights).value
        check = duality_check(values[turns], flux_pairing(field, circle_map, mesh))
        assert check.passed
    print(f"  θ̃(N) = {values}")
    for turns in (2, 4, 8):
        assert abs(values[turns] - turns * values[1]) <= 1e-6 * abs(turns * values[1])


def test_mass_flow_adds_under_concatenation():
    """θ̃(h[0,½] · h[½,1]) = θ̃(h[0,1]) = θ̃(h[0,½]) + θ̃(h[½,1])"""
    torus = make_torus(2.0, 1.0)
    band = default_band(torus)
    field = stirring_field(torus, band, 1)
    mesh = build_quadrature(torus, 16)
    circle_map = circle_map_for(torus, band.loop_axis)
    whole = integrate_isotopy(field, _mesh_particles(mesh), 512, track_jacobian=False)
    first = integrate_isotopy(field, _mesh_particles(mesh), 256, t0=0.0, t1=0.5, track_jacobian=False)
    second = integrate_isotopy(field, first.final, 256, t0=0.5, t1=1.0, track_jacobian=False)
    joined = concatenate(first, second)
    theta_whole = mass_flow(whole, circle_map, mesh.weights).value
    theta_joined = mass_flow(joined, circle_map, mesh.weights).value
    parts = [mass_flow(iso, circle_map, mesh.weights).value for iso in (first, second)]
    print(f"  전체 {theta_whole:.12f}, 이어붙임 {theta_joined:.12f}, 구간 합 {sum(parts):.12f}")
    assert joined.steps == whole.steps
    assert abs(theta_joined - theta_whole) <= 1e-9 * abs(theta_whole)
    assert abs(sum(parts) - theta_joined) <= 1e-12 * abs(theta_joined)
    assert min(parts) > 0.0


def test_lift_consistency_under_refinement():
    strip = make_flat_strip(1.0, 1.0)
    band = default_band(strip)
    field = stirring_field(strip, band, 1)
    mesh = build_quadrature(strip, 16)
    circle_map = circle_map_for(strip, band.loop_axis)
    coarse = mass_flow(integrate_isotopy(field, _mesh_particles(mesh), 64, track_jacobian=False),
                       circle_map, mesh.weights).value
    fine = mass_flow(integrate_isotopy(field, _mesh_particles(mesh), 128, track_jacobian=False),
                     circle_map, mesh.weights).value
    print(f"  K=64: {coarse:.14f}, K=128: {fine:.14f}")
    assert abs(coarse - fine) <= 1e-7 * abs(fine)


def test_lift_safety_error():
    annulus = make_flat_annulus(1.0, 2.0)
    band = default_band(annulus, "rigid")
    field = stirring_field(annulus, band, 1, angular_speed=200.0)
    mesh = build_quadrature(annulus, 8)
    iso = integrate_isotopy(field, _mesh_particles(mesh), 64, track_jacobian=False)
    try:
        mass_flow(iso, circle_map_for(annulus, band.loop_axis), mesh.weights)
    except LiftSafetyError as e:
        print(f"  ✅ {e}")
    else:
        raise AssertionError("LiftSafetyError가 발생해야 합니다")


def test_circle_map_requires_periodic_axis():
    annulus = make_flat_annulus(1.0, 2.0)
    try:
        circle_map_for(annulus, 0)
    except ValueError as e:
        print(f"  ✅ {e}")
    else:
        raise AssertionError("비주기 축에서는 원 값 사상을 만들 수 없습니다")
    assert measure_winding(circle_map_for(make_torus(), 0)) == (1, 0)
    assert measure_winding(circle_map_for(annulus, 1)) == (0, 1)


def test_jensen_chain_on_annulus():
    """강체 회전: slack = 15 ln 2 / 9"""
    annulus = make_flat_annulus(1.0, 2.0)
    band = default_band(annulus, "rigid")
    field = stirring_field(annulus, band, 1, angular_speed=1.0)
    circle_map = circle_map_for(annulus, band.loop_axis)
    slacks = []
    for resolution in ((64, 16), (128, 16)):
        mesh = build_quadrature(annulus, resolution)
        j_surface = kinetic_energy(field, mesh, refine=False).value
        norm = normalized_mass_flow(flux_pairing(field, circle_map, mesh), mesh.area, df_l2_norm(circle_map, mesh))
        check = jensen_chain(j_surface, norm, mesh.area)
        assert check.passed
        slacks.append(check.measured)
    expected = 15.0 * math.log(2.0) / 9.0
    oracle = annulus_values(1.0, 2.0, "rigid", angular_speed=1.0)
    print(f"  slack {slacks}, 기준 {expected:.10f}")
    assert abs(oracle.jensen_slack - expected) <= 1e-12
    assert abs(slacks[1] - expected) <= 1e-3 * expected
    assert abs(slacks[1] / slacks[0] - 1.0) <= 0.01


def test_zero_field_has_zero_mass_flow():
    torus = make_torus(2.0, 1.0)
    still = stirring_field(torus, default_band(torus), 0)
    mesh = build_quadrature(torus, 8)
    iso = integrate_isotopy(still, _mesh_particles(mesh), 8, track_jacobian=False)
    circle_map = circle_map_for(torus, 0)
    assert mass_flow(iso, circle_map, mesh.weights).value == 0.0
    check = jensen_chain(0.0, 0.0, mesh.area)
    assert check.passed and check.measured == 1.0


def main():
    print("=" * 60)
    print("🔄 질량 흐름 테스트")
    print("=" * 60)
    tests = [
        test_rigid_annulus_mass_flow,
        test_torus_duality_and_linearity,
        test_mass_flow_adds_under_concatenation,
        test_lift_consistency_under_refinement,
        test_lift_safety_error,
        test_circle_map_requires_periodic_axis,
        test_jensen_chain_on_annulus,
        test_zero_field_has_zero_mass_flow,
    ]
    for test in tests:
        print(f"\n▶ {test.__name__}")
        test()
    print("\n" + "=" * 60)
    print("✅ 모든 테스트 통과")
    print("=" * 60)


if __name__ == "__main__":
    main()
