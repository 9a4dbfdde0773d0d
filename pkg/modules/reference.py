"""
기준값(오라클) 모듈 - 평면 고리/띠 인스턴스의 닫힌 형식 값

주요 모듈의 구적·적분 코드를 전혀 쓰지 않고 sympy(기호 적분), mpmath(적응 구적),
Fraction(정확한 조화수)로 독립 계산합니다.
"""
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import sympy as sp


@dataclass
class AnnulusOracle:
    """고리 r ∈ [r₀, r₁] 위의 각속도 프로필 ω(r)에 대한 닫힌 형식 값"""

    inner_radius: float
    outer_radius: float
    profile: str
    area: float
    energy: float
    theta: float
    df_norm_squared: float

    @property
    def triple(self):
        return self.area, self.energy, self.theta

    @property
    def jensen_slack(self):
        """J / (θ̃²/(2‖df‖²))"""
        if self.theta == 0.0:
            return 1.0
        return self.energy / (self.theta ** 2 / (2.0 * self.df_norm_squared))

    def orbit_angle(self, radius, time):
        """반지름 radius의 입자가 시각 time까지 도는 각 (rigid)"""
        return self.theta / self.area * time


def _rigid_closed_form(r0, r1, omega):
    r, th = sp.symbols("r theta", positive=True)
    a, b, w = sp.nsimplify(r0), sp.nsimplify(r1), sp.nsimplify(omega)
    area = sp.integrate(r, (r, a, b), (th, 0, 2 * sp.pi))
    energy = sp.integrate(sp.Rational(1, 2) * w ** 2 * r ** 2 * r, (r, a, b), (th, 0, 2 * sp.pi))
    theta = sp.integrate(w * r, (r, a, b), (th, 0, 2 * sp.pi))
    df2 = sp.integrate(r / r ** 2, (r, a, b), (th, 0, 2 * sp.pi))
    return area, energy, theta, df2


def _smoothstep(t):
    if t <= 0:
        return mpmath.mpf(0)
    if t >= 1:
        return mpmath.mpf(1)
    return t ** 3 * (10 - 15 * t + 6 * t ** 2)


def annulus_values(inner_radius=1.0, outer_radius=2.0, profile="rigid", angular_speed=1.0, turns=1,
                   band=None, ramp=None):
    """
    평면 고리의 (넓이, J, θ̃) 닫힌 형식 값

    Args:
        profile: "rigid" (띠 전체에서 각속도 ω) 또는 "bump" (band 안에서 smoothstep으로 켜짐)
        band: bump 띠 (lo, hi), ramp: 경사 폭

    Returns:
        AnnulusOracle
    """
    r0, r1 = float(inner_radius), float(outer_radius)
    omega = float(angular_speed) * turns
    if r0 >= r1:
        return AnnulusOracle(r0, r1, profile, 0.0, 0.0, 0.0, 0.0)

    if profile == "rigid":
        area, energy, theta, df2 = _rigid_closed_form(r0, r1, omega)
        return AnnulusOracle(r0, r1, profile, float(area), float(energy), float(theta), float(df2))

    lo, hi = band
    ramp = 0.15 * (hi - lo) if ramp is None else ramp
    with mpmath.workdps(30):
        lo_m, hi_m, ramp_m = mpmath.mpf(lo), mpmath.mpf(hi), mpmath.mpf(ramp)

        def weight(r):
            return _smoothstep((r - lo_m) / ramp_m) * _smoothstep((hi_m - r) / ramp_m)

        breaks = [lo_m, lo_m + ramp_m, hi_m - ramp_m, hi_m]
        energy = mpmath.pi * omega ** 2 * mpmath.quad(lambda r: weight(r) ** 2 * r ** 3, breaks)
        theta = 2 * mpmath.pi * omega * mpmath.quad(lambda r: weight(r) * r, breaks)
        area = mpmath.pi * (mpmath.mpf(r1) ** 2 - mpmath.mpf(r0) ** 2)
        df2 = 2 * mpmath.pi * mpmath.log(mpmath.mpf(r1) / r0)
        return AnnulusOracle(r0, r1, profile, float(area), float(energy), float(theta), float(df2))


def cutoff_l2_mass_exact(delta):
    """∫_{−δ}^{δ} η² ds = δ·(1 + ½∫₀¹(1 − S)² dx) (기호 적분)"""
    x = sp.symbols("x")
    step = 10 * x ** 3 - 15 * x ** 4 + 6 * x ** 5
    tail = sp.integrate((1 - step) ** 2, (x, 0, 1))
    return float(sp.nsimplify(delta) * (1 + tail / 2))


def smoothstep_square_integral():
    """∫₀¹ S(x)² dx (정확한 유리수)"""
    x = sp.symbols("x")
    step = 10 * x ** 3 - 15 * x ** 4 + 6 * x ** 5
    return sp.integrate(step ** 2, (x, 0, 1))


def torus_area(major_radius=2.0, minor_radius=1.0):
    return float(4 * sp.pi ** 2 * sp.nsimplify(major_radius) * sp.nsimplify(minor_radius))


def sphere_offset_jacobian(radius, s):
    """구면 안쪽 법선 방향 오프셋 넓이 비 (1 − s/R)²"""
    return float((1 - sp.nsimplify(s) / sp.nsimplify(radius)) ** 2)


def harmonic_witness(bound):
    """
    H_K ≥ B 인 최소 K

    B ≤ 6은 Fraction으로 정확히, 그 이상은 mpmath.harmonic으로 찾습니다.
    """
    if bound <= 0:
        return 0
    if bound <= 6:
        total, k = Fraction(0), 0
        target = Fraction(bound)
        while total < target:
            k += 1
            total += Fraction(1, k)
        return k
    with mpmath.workdps(40):
        guess = int(mpmath.floor(mpmath.exp(mpmath.mpf(bound) - mpmath.euler)))
        k = max(1, guess - 2)
        while mpmath.harmonic(k) >= bound:
            k -= 1
        while mpmath.harmonic(k) < bound:
            k += 1
        return k


def harmonic_sum(count):
    """H_K (mpmath)"""
    with mpmath.workdps(40):
        return mpmath.harmonic(count)
