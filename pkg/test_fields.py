"""
벡터장 테스트

교반장의 내재 발산, 띠 지지, 관상 확장의 공간 발산(corrected/product)과 대조군을 확인합니다.
"""

import math
import os
import sys

import numpy as np

# 현재 디렉토리를 Python 경로에 추가
sys.path.insert(0, os.path.dirname(__file__))

from modules.fields import (
    Band,
    BandError,
    CutoffProfile,
    ExtensionModeError,
    compressive_field,
    cutoff,
    default_band,
    euclidean_divergence,
    extend_field,
    gradient_field,
    intrinsic_divergence,
    stirring_field,
    validate_band,
)
from modules.geometry import (
    build_quadrature,
    make_flat_annulus,
    make_flat_strip,
    make_torus,
    sample_chart_points,
    tubular_chart,
)


def _torus_field(turns=1):
    torus = make_torus(2.0, 1.0)
    return stirring_field(torus, default_band(torus), turns)


def test_cutoff_profile():
    delta = 0.1
    s = np.array([0.0, 0.04, 0.05, 0.0625, 0.075, 0.09])
    eta = cutoff(s, delta)
    print(f"  η = {eta}")
    assert eta[0] == 1.0 and eta[1] == 1.0 and eta[2] == 1.0
    assert abs(eta[3] - 0.5) <= 1e-12
    assert eta[4] <= 1e-12 and eta[5] == 0.0
    assert CutoffProfile(delta).support == 0.75 * delta


def test_intrinsic_divergence_torus():
    field = _torus_field()
    mesh = build_quadrature(field.surface, 32)
    div = intrinsic_divergence(field, mesh.u, mesh.v)
    print(f"  max |div| = {np.max(np.abs(div)):.3e}")
    assert np.max(np.abs(div)) <= 1e-6


def test_intrinsic_divergence_flat_strip():
    strip = make_flat_strip(1.0, 1.0)
    field = stirring_field(strip, default_band(strip), 3)
    mesh = build_quadrature(strip, 32)
    assert np.max(np.abs(intrinsic_divergence(field, mesh.u, mesh.v))) <= 1e-10


def test_gradient_field_is_negative_control():
    field = gradient_field(_torus_field())
    mesh = build_quadrature(field.surface, 32)
    div = intrinsic_divergence(field, mesh.u, mesh.v)
    print(f"  기울기장 max |div| = {np.max(np.abs(div)):.3e}")
    assert np.max(np.abs(div)) > 1e-3


def test_band_support_and_scaling():
    field = _torus_field()
    band = field.band
    u = np.linspace(0.0, 2.0 * math.pi, 17)
    v_out = np.full_like(u, 0.5 * band.lo)
    vu, vv = field.components(u, v_out)
    assert np.all(vu == 0.0) and np.all(vv == 0.0)

    v_in = np.full_like(u, band.center)
    vu1, _ = field.components(u, v_in)
    vu4, _ = field.scaled(4.0).components(u, v_in)
    assert np.allclose(vu4, 4.0 * vu1, rtol=1e-14, atol=0.0)
    assert np.all(vu1 > 0.0)


def test_zero_turns_gives_zero_field():
    torus = make_torus(2.0, 1.0)
    field = stirring_field(torus, default_band(torus), 0)
    vu, vv = field.components(np.array([0.1, 1.0]), np.array([3.0, 3.0]))
    assert np.all(vu == 0.0) and np.all(vv == 0.0)


def test_rigid_annulus_speed():
    """평면 고리 강체 회전 (ω=1): |V(r, θ)| = r"""
    annulus = make_flat_annulus(1.0, 2.0)
    field = stirring_field(annulus, default_band(annulus, "rigid"), 1, angular_speed=1.0)
    r = np.linspace(1.05, 1.95, 7)
    theta = np.linspace(0.0, 6.0, 7)
    speed = np.linalg.norm(field.cartesian(r, theta), axis=-1)
    print(f"  속도 오차 {np.max(np.abs(speed - r)):.3e}")
    assert np.max(np.abs(speed - r)) <= 1e-8


def test_band_errors():
    annulus = make_flat_annulus(1.0, 2.0)
    strip = make_flat_strip(1.0, 1.0)
    cases = [
        (annulus, Band(loop_axis=0, lo=0.5, hi=5.5, ramp=0.5)),
        (strip, Band(loop_axis=1, lo=0.0, hi=0.9, ramp=0.1)),
        (strip, Band(loop_axis=1, lo=0.2, hi=0.4, ramp=0.15)),
        (strip, Band(loop_axis=1, lo=0.2, hi=0.8, profile="rigid")),
    ]
    for surface, band in cases:
        try:
            validate_band(surface, band)
        except BandError as e:
            print(f"  ✅ {e}")
        else:
            raise AssertionError(f"BandError가 발생해야 합니다: {band}")


def test_corrected_extension_is_divergence_free():
    field = _torus_field()
    chart = tubular_chart(field.surface, 0.05)
    ambient = extend_field(field, chart, CutoffProfile(0.05), "corrected")
    u, v, s = sample_chart_points(field.surface, 2000, seed=17, delta=0.05)
    div = euclidean_divergence(ambient, chart.map(u, v, s))
    mesh = build_quadrature(field.surface, 32)
    vmax = float(np.max(np.linalg.norm(field.cartesian(mesh.u, mesh.v), axis=-1)))
    print(f"  corrected max |div| = {np.max(np.abs(div)):.3e} (기준 {1e-5 * vmax:.3e})")
    assert np.max(np.abs(div)) <= 1e-5 * vmax


def test_product_defect_shrinks_with_delta():
    field = _torus_field()
    mesh = build_quadrature(field.surface, 32)
    vmax = float(np.max(np.linalg.norm(field.cartesian(mesh.u, mesh.v), axis=-1)))
    defects = []
    for delta in (0.02, 0.04, 0.08):
        chart = tubular_chart(field.surface, delta)
        ambient = extend_field(field, chart, CutoffProfile(delta), "product")
        u, v, s = sample_chart_points(field.surface, 2000, seed=17, delta=delta)
        defect = float(np.max(np.abs(euclidean_divergence(ambient, chart.map(u, v, s)))))
        assert defect <= 3.0 * delta * field.surface.kappa_max * vmax
        defects.append(defect)
    slope = math.log(defects[2] / defects[0]) / math.log(4.0)
    print(f"  결손 {defects}, 기울기 {slope:.3f}")
    assert defects[0] > 1e-5 * vmax
    assert 0.5 <= slope <= 1.5


def test_product_equals_corrected_on_flat_strip():
    strip = make_flat_strip(1.0, 1.0)
    field = stirring_field(strip, default_band(strip), 2)
    chart = tubular_chart(strip, 0.1)
    u, v, s = sample_chart_points(strip, 300, seed=2, delta=0.1)
    corrected = extend_field(field, chart, CutoffProfile(0.1), "corrected").at_chart(u, v, s)
    product = extend_field(field, chart, CutoffProfile(0.1), "product").at_chart(u, v, s)
    assert np.max(np.abs(corrected - product)) <= 1e-14
    ambient = extend_field(field, chart, CutoffProfile(0.1), "corrected")
    div = euclidean_divergence(ambient, chart.map(u, v, s))
    assert np.max(np.abs(div)) <= 1e-10 * float(np.max(np.linalg.norm(corrected, axis=-1)))


def test_restriction_and_tube_support():
    field = _torus_field()
    chart = tubular_chart(field.surface, 0.05)
    ambient = extend_field(field, chart, CutoffProfile(0.05))
    u, v = sample_chart_points(field.surface, 200, seed=9)
    on_surface = ambient.at_chart(u, v, np.zeros_like(u))
    assert np.max(np.abs(on_surface - field.cartesian(u, v))) <= 1e-12
    far = chart.map(u, v, np.full_like(u, 0.04))
    assert np.all(ambient(far) == 0.0)


def test_product_mode_rejected_when_exact_required():
    field = _torus_field()
    chart = tubular_chart(field.surface, 0.05)
    try:
        extend_field(field, chart, CutoffProfile(0.05), "product", require_exact=True)
    except ExtensionModeError as e:
        print(f"  ✅ {e}")
    else:
        raise AssertionError("ExtensionModeError가 발생해야 합니다")
    strip = make_flat_strip()
    flat = stirring_field(strip, default_band(strip))
    extend_field(flat, tubular_chart(strip, 0.05), CutoffProfile(0.05), "product", require_exact=True)


def test_compressive_divergence():
    points = np.random.default_rng(0).uniform(-1.0, 1.0, size=(50, 3))
    div = euclidean_divergence(compressive_field(), points)
    assert np.max(np.abs(div + 1.0)) <= 1e-8


def main():
    print("=" * 60)
    print("🌀 벡터장 테스트")
    print("=" * 60)
    tests = [
        test_cutoff_profile,
        test_intrinsic_divergence_torus,
        test_intrinsic_divergence_flat_strip,
        test_gradient_field_is_negative_control,
        test_band_support_and_scaling,
        test_zero_turns_gives_zero_field,
        test_rigid_annulus_speed,
        test_band_errors,
        test_corrected_extension_is_divergence_free,
        test_product_defect_shrinks_with_delta,
        test_product_equals_corrected_on_flat_strip,
        test_restriction_and_tube_support,
        test_product_mode_rejected_when_exact_required,
        test_compressive_divergence,
    ]
    for test in tests:
        print(f"\n▶ {test.__name__}")
        test()
    print("\n" + "=" * 60)
    print("✅ 모든 테스트 통과")
    print("=" * 60)


if __name__ == "__main__":
    main()
