"""
벡터장 모듈 - 곡면 위의 교반장과 관상 근방으로의 발산 없는 확장

- 교반장 V_N: 순환 방향(loop axis)을 따라 흐르고 띠(band) 밖에서 0
- 절단 함수 η: [0, δ/2]에서 1, (δ/2, 3δ/4)에서 감소, 3δ/4 이후 0 (5차 smoothstep)
- 확장: corrected 모드 (야코비안 보정, 정확히 발산 0) / product 모드 η(s)·V(x_h)
- 대조군: 기울기장 ∇ψ, 압축장 −x∂_x, 시간 역전 회전장
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

import config
from modules.geometry import metric_at, shape_operator
from modules.utils import smoothstep5

LOOP_MEAN_NODES = 64
DENSITY_SPLINE_NODES = 257
STREAM_GAUSS_NODES = 48


class BandError(ValueError):
    """교반 띠가 차트 안에 매끄럽게 들어가지 않는 경우"""


class ExtensionModeError(ValueError):
    """product 모드에 정확한 발산 허용치를 요구한 경우"""


# =============================================================================
# 띠와 절단 함수
# =============================================================================
@dataclass(frozen=True)
class Band:
    """
    교반 띠: 순환 좌표축 loop_axis를 따라 돌고, 다른 축(band axis)의 [lo, hi]에 지지됩니다.

    profile="bump"이면 양 끝 ramp 폭에서 smoothstep으로 켜지고 꺼지며,
    "rigid"이면 띠 전체에서 1입니다 (띠 = 차트 전체 범위여야 함).
    """

    loop_axis: int
    lo: float
    hi: float
    ramp: float = 0.0
    profile: str = "bump"

    @property
    def band_axis(self):
        return 1 - self.loop_axis

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    def weight(self, t):
        """띠 프로필 β(t)"""
        t = np.asarray(t, dtype=float)
        if self.profile == "rigid":
            return np.where((t >= self.lo) & (t <= self.hi), 1.0, 0.0)
        return smoothstep5((t - self.lo) / self.ramp) * smoothstep5((self.hi - t) / self.ramp)


def axis_range(surface, axis):
    return surface.u_range if axis == 0 else surface.v_range


def default_band(surface, profile="bump", lo=None, hi=None, ramp=None, loop_axis=None):
    """
    곡면 종류에 맞는 기본 띠

    두 방향이 모두 주기적이면 u(자오선)를 따라 돌고, 아니면 주기 방향을 따라 돕니다.
    """
    if loop_axis is None:
        loop_axis = 0 if surface.periodic[0] else 1
    band_axis = 1 - loop_axis
    start, end = axis_range(surface, band_axis)
    width = end - start

    if profile == "rigid":
        lo = start if lo is None else lo
        hi = end if hi is None else hi
        return Band(loop_axis=loop_axis, lo=float(lo), hi=float(hi), ramp=0.0, profile="rigid")

    if surface.periodic[band_axis]:
        margin = 0.3 * width / (2.0 * math.pi)
    else:
        margin = 0.1 * width
    lo = start + margin if lo is None else lo
    hi = end - margin if hi is None else hi
    ramp = config.DEFAULT_RAMP_FRACTION * (hi - lo) if ramp is None else ramp
    return Band(loop_axis=loop_axis, lo=float(lo), hi=float(hi), ramp=float(ramp), profile=profile)


def validate_band(surface, band):
    """
    띠가 차트 안에 있는지 검사합니다.

    Raises:
        BandError: 순환축이 주기적이지 않거나, bump 띠가 차트 경계에 닿거나,
                   rigid 띠가 차트 전체 범위와 다른 경우
    """
    if band.loop_axis not in (0, 1):
        raise BandError(f"순환축은 0(u) 또는 1(v)이어야 합니다: {band.loop_axis}")
    if not surface.periodic[band.loop_axis]:
        raise BandError(f"순환축 {'uv'[band.loop_axis]}이 주기적이지 않습니다 ({surface.kind})")
    if band.profile not in config.AVAILABLE_PROFILES:
        raise BandError(f"지원하지 않는 띠 프로필: {band.profile} (가능: {config.AVAILABLE_PROFILES})")

    start, end = axis_range(surface, band.band_axis)
    tol = 1e-12 * max(1.0, abs(end - start))
    if band.profile == "rigid":
        if abs(band.lo - start) > tol or abs(band.hi - end) > tol:
            raise BandError(
                f"rigid 띠는 차트 전체 [{start:.6g}, {end:.6g}]여야 합니다: [{band.lo:.6g}, {band.hi:.6g}]"
            )
        return band

    if not (start < band.lo < band.hi < end):
        raise BandError(
            f"띠 [{band.lo:.6g}, {band.hi:.6g}]가 차트 경계 [{start:.6g}, {end:.6g}]에 닿거나 벗어납니다"
        )
    if not band.ramp > 0.0 or 2.0 * band.ramp > band.hi - band.lo + tol:
        raise BandError(f"ramp 폭이 잘못되었습니다: ramp={band.ramp:.6g}, 띠 폭={band.hi - band.lo:.6g}")
    return band


@dataclass(frozen=True)
class CutoffProfile:
    """관상 근방 절단 함수 η (법선 좌표 |s|의 함수)"""

    delta: float

    def __call__(self, s):
        return cutoff(np.abs(np.asarray(s, dtype=float)), self.delta)

    @property
    def support(self):
        return 0.75 * self.delta


def cutoff(s, delta):
    """
    η(s) = 1 (s ≤ δ/2), 1 − S((s − δ/2)/(δ/4)) (δ/2 < s < 3δ/4), 0 (s ≥ 3δ/4)

    S는 5차 smoothstep이므로 접합점에서 C²입니다.
    """
    s = np.asarray(s, dtype=float)
    value = 1.0 - smoothstep5((s - 0.5 * delta) / (0.25 * delta))
    return value if value.ndim else float(value)


# =============================================================================
# 유선 함수와 곡면 벡터장
# =============================================================================
@dataclass
class StreamFunction:
    """
    띠 좌표 t만의 함수인 유선 함수 ψ(t), ψ'(t) = N·ω·β(t)·m(t)

    m(t)는 순환 방향에 대한 √det g의 평균입니다. ψ는 띠 아래에서 0, 위에서 총 플럭스로
    상수이므로 속도장은 띠 안에만 지지됩니다.
    """

    surface: object
    band: Band
    amplitude: float
    angular_speed: float
    density_spline: Callable

    def loop_density(self, t):
        """m(t) (띠 구간으로 잘라서 평가)"""
        t = np.clip(self.wrap(t), self.band.lo, self.band.hi)
        return self.density_spline(t)

    def wrap(self, t):
        t = np.asarray(t, dtype=float)
        if self.surface.periodic[self.band.band_axis]:
            start, end = axis_range(self.surface, self.band.band_axis)
            return start + np.mod(t - start, end - start)
        return t

    def derivative(self, t):
        """ψ'(t)"""
        return self.amplitude * self.angular_speed * self.band.weight(self.wrap(t)) * self.loop_density(t)

    def __call__(self, t):
        t = np.clip(self.wrap(t), self.band.lo, self.band.hi)
        x, w = leggauss(STREAM_GAUSS_NODES)
        half = 0.5 * (t - self.band.lo)
        nodes = self.band.lo + half[..., None] * (x + 1.0)
        return np.sum(half[..., None] * w * self.derivative(nodes), axis=-1)

    @property
    def total_flux(self):
        return float(self(np.asarray(self.band.hi)))


def _loop_density_spline(surface, band):
    """m(t) = 순환 방향 평균 √det g 를 3차 스플라인으로 보간합니다."""
    loop_start, loop_end = axis_range(surface, band.loop_axis)
    loop = loop_start + (loop_end - loop_start) * np.arange(LOOP_MEAN_NODES) / LOOP_MEAN_NODES
    t = np.linspace(band.lo, band.hi, DENSITY_SPLINE_NODES)
    tt, ll = np.meshgrid(t, loop, indexing="ij")
    if band.loop_axis == 0:
        sample = metric_at(surface, ll, tt)
    else:
        sample = metric_at(surface, tt, ll)
    mean = np.mean(sample.sqrt_det_g, axis=1)
    return CubicSpline(t, mean)


@dataclass
class TangentField:
    """
    곡면 위 벡터장 (좌표 성분 V^u, V^v)

    time_factor가 있으면 시간 의존 대조군이며, 값은 components × time_factor(t)입니다.
    """

    surface: object
    label: str
    components_fn: Callable
    band: Optional[Band] = None
    stream: Optional[StreamFunction] = None
    amplitude: float = 1.0
    plateau_speed: float = 0.0
    time_factor: Optional[Callable] = None

    @property
    def autonomous(self):
        return self.time_factor is None

    def components(self, u, v, t=0.0):
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        vu, vv = self.components_fn(u, v)
        if self.time_factor is not None:
            factor = self.time_factor(t)
            vu, vv = vu * factor, vv * factor
        return vu, vv

    def cartesian(self, u, v, t=0.0):
        """유클리드 속도 V = V^u X_u + V^v X_v"""
        sample = metric_at(self.surface, u, v)
        vu, vv = self.components(u, v, t)
        return vu[..., None] * sample.xu + vv[..., None] * sample.xv

    def speed_squared(self, u, v, t=0.0, metric=None):
        """|V|² = g_ij V^i V^j"""
        sample = metric if metric is not None else metric_at(self.surface, u, v)
        vu, vv = self.components(u, v, t)
        g = sample.g
        return g[..., 0, 0] * vu * vu + 2.0 * g[..., 0, 1] * vu * vv + g[..., 1, 1] * vv * vv

    def scaled(self, factor):
        """factor·V (교반장이면 회전 수 N도 factor배)"""
        base = self.components_fn

        def components(u, v):
            vu, vv = base(u, v)
            return factor * vu, factor * vv

        stream = None
        if self.stream is not None:
            stream = replace(self.stream, amplitude=self.stream.amplitude * factor)
        return replace(
            self,
            components_fn=components,
            stream=stream,
            amplitude=self.amplitude * factor,
            plateau_speed=abs(factor) * self.plateau_speed,
        )


def zero_field(surface):
    def components(u, v):
        return np.zeros_like(u), np.zeros_like(u)

    return TangentField(surface=surface, label="zero", components_fn=components, amplitude=0.0)


def stirring_field(surface, band, turns=1, angular_speed=None):
    """
    띠에 지지된 교반장 V_N = N·V_1

    순환축 성분은 V^loop = N·ω·β(t)·m(t)/√det g, 띠축 성분은 0입니다.
    √g·V^loop가 순환 좌표에 의존하지 않으므로 내재 발산은 해석적으로 0입니다.

    Args:
        surface: EmbeddedSurface
        band: Band (validate_band 통과)
        turns: 회전 수 N (0이면 영벡터장)
        angular_speed: ω (기본 2π, 단위 시간에 한 바퀴)

    Returns:
        TangentField
    """
    if turns < 0:
        raise ValueError(f"회전 수는 0 이상이어야 합니다: N={turns}")
    validate_band(surface, band)
    if turns == 0:
        logging.info("⚠️ N=0: 영벡터장을 반환합니다")
        return zero_field(surface)

    omega = config.DEFAULT_ANGULAR_SPEED if angular_speed is None else float(angular_speed)
    stream = StreamFunction(
        surface=surface,
        band=band,
        amplitude=float(turns),
        angular_speed=omega,
        density_spline=_loop_density_spline(surface, band),
    )
    loop_axis = band.loop_axis

    def components(u, v):
        t = v if loop_axis == 0 else u
        rate = stream.derivative(t) / metric_at(surface, u, v).sqrt_det_g
        zero = np.zeros_like(rate)
        return (rate, zero) if loop_axis == 0 else (zero, rate)

    # 띠 중앙에서 순환각 f의 최소 증가율
    loop_start, loop_end = axis_range(surface, loop_axis)
    period = loop_end - loop_start
    loop = loop_start + period * np.arange(LOOP_MEAN_NODES) / LOOP_MEAN_NODES
    center = np.full_like(loop, band.center)
    vu, vv = components(loop, center) if loop_axis == 0 else components(center, loop)
    rate = vu if loop_axis == 0 else vv
    plateau = float(np.min(np.abs(rate))) * 2.0 * math.pi / period

    logging.info(
        f"✅ 교반장 생성: {surface.kind}, 순환축 {'uv'[loop_axis]}, 띠 [{band.lo:.4f}, {band.hi:.4f}], "
        f"N={turns}, ω={omega:.6f}, 총 플럭스 {stream.total_flux:.6f}"
    )
    return TangentField(
        surface=surface,
        label="stirring",
        components_fn=components,
        band=band,
        stream=stream,
        amplitude=float(turns),
        plateau_speed=plateau,
    )


def gradient_field(stirring):
    """
    대조군: 회전하지 않은 기울기장 ∇ψ = g⁻¹dψ (발산이 0이 아님)
    """
    stream = stirring.stream
    if stream is None:
        raise ValueError("기울기장은 교반장의 유선 함수가 필요합니다")
    surface = stirring.surface
    band_axis = stream.band.band_axis

    def components(u, v):
        t = u if band_axis == 0 else v
        g_inv = metric_at(surface, u, v).g_inv
        slope = stream.derivative(t)
        return g_inv[..., 0, band_axis] * slope, g_inv[..., 1, band_axis] * slope

    return replace(stirring, label="gradient", components_fn=components, plateau_speed=0.0)


def reversing_field(field):
    """대조군: 시간 t=1/2에서 방향이 바뀌는 비자율 벡터장 cos(πt)·V"""
    return replace(field, label=f"{field.label}_reversing", time_factor=lambda t: math.cos(math.pi * t))


def intrinsic_divergence(field, u, v, t=0.0):
    """
    내재 발산 div_g V = (1/√det g) ∂_i(√det g V^i) 의 중심차분

    스텝은 FD_DIVERGENCE_STEP × chart scale 입니다.
    """
    surface = field.surface
    h = config.FD_DIVERGENCE_STEP * surface.chart_scale
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))

    def flux(uu, vv, axis):
        comp = field.components(uu, vv, t)[axis]
        return metric_at(surface, uu, vv).sqrt_det_g * comp

    d_u = (flux(u + h, v, 0) - flux(u - h, v, 0)) / (2.0 * h)
    d_v = (flux(u, v + h, 1) - flux(u, v - h, 1)) / (2.0 * h)
    return (d_u + d_v) / metric_at(surface, u, v).sqrt_det_g


# =============================================================================
# 관상 근방 확장
# =============================================================================
@dataclass
class AmbientField:
    """
    관상 근방 𝒯_{3δ/4}(M)에 지지된 공간 벡터장 Ṽ

    corrected: Ṽ(Φ(x_h, s)) = η(s)·DΦ(V)/det DΦ   (관상 좌표 성분 W = ηV/J, 정확히 발산 0)
    product:   Ṽ(Φ(x_h, s)) = η(s)·V(x_h)           (곡면이 휘어 있으면 O(δκ) 발산 결손)
    """

    base: TangentField
    chart: object
    profile: CutoffProfile
    mode: str
    amplitude: float = 1.0

    @property
    def delta(self):
        return self.chart.delta

    @property
    def surface(self):
        return self.chart.surface

    @property
    def autonomous(self):
        return self.base.autonomous

    def _frame(self, u, v, s):
        shape = shape_operator(self.surface, u, v)
        s = np.asarray(s, dtype=float)
        eye = np.broadcast_to(np.eye(2), shape.shape)
        return eye - s[..., None, None] * shape

    def tube_components(self, u, v, s, t=0.0):
        """관상 좌표 (u, v, s) 성분 (W^u, W^v, W^s); W^s ≡ 0"""
        u, v, s = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float), np.asarray(s, float))
        vu, vv = self.base.components(u, v, t)
        eta = self.profile(s)
        frame = self._frame(u, v, s)
        if self.mode == "corrected":
            jac = np.linalg.det(frame)
            wu, wv = eta * vu / jac, eta * vv / jac
        else:
            rhs = np.stack([vu, vv], axis=-1)[..., None]
            solved = np.linalg.solve(frame, rhs)[..., 0]
            wu, wv = eta * solved[..., 0], eta * solved[..., 1]
        return wu, wv, np.zeros_like(wu)

    def at_chart(self, u, v, s, t=0.0):
        """관상 좌표에서의 유클리드 벡터"""
        u, v, s = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float), np.asarray(s, float))
        sample = metric_at(self.surface, u, v)
        vu, vv = self.base.components(u, v, t)
        eta = self.profile(s)
        if self.mode == "corrected":
            frame = self._frame(u, v, s)
            moved = frame @ np.stack([vu, vv], axis=-1)[..., None]
            jac = np.linalg.det(frame)
            cu, cv = moved[..., 0, 0] / jac, moved[..., 1, 0] / jac
        else:
            cu, cv = vu, vv
        return eta[..., None] * (cu[..., None] * sample.xu + cv[..., None] * sample.xv)

    def __call__(self, points, t=0.0):
        """임의의 유클리드 점에서 Ṽ (관상 근방 밖에서는 0)"""
        points = np.asarray(points, dtype=float)
        u, v, s = self.chart.inverse(points)
        inside = self.inside_chart(u, v, s)
        out = np.zeros(points.shape)
        if np.any(inside):
            out[inside] = self.at_chart(u[inside], v[inside], s[inside], t)
        return out

    def inside_chart(self, u, v, s):
        inside = np.abs(s) < self.profile.support
        for axis, coord in ((0, u), (1, v)):
            if not self.surface.periodic[axis]:
                start, end = axis_range(self.surface, axis)
                inside &= (coord >= start) & (coord <= end)
        return inside

    def scaled(self, factor):
        return replace(self, base=self.base.scaled(factor), amplitude=self.amplitude * factor)


def extend_field(field, chart, profile, mode="corrected", require_exact=False):
    """
    곡면 벡터장을 관상 근방으로 확장합니다.

    Args:
        field: TangentField
        chart: TubularChart (profile.delta와 같은 δ)
        profile: CutoffProfile
        mode: "corrected" 또는 "product"
        require_exact: True이면 정확한 발산 0을 요구 (곡면 위 product 모드는 거부)

    Raises:
        ExtensionModeError: 곡률이 있는 곡면에서 product 모드에 정확한 발산 0을 요구한 경우
    """
    if mode not in config.AVAILABLE_EXTENSION_MODES:
        raise ValueError(f"지원하지 않는 확장 모드: {mode} (가능: {config.AVAILABLE_EXTENSION_MODES})")
    if abs(profile.delta - chart.delta) > 1e-12 * chart.delta:
        raise ValueError(f"절단 함수 δ={profile.delta}와 관상 근방 δ={chart.delta}가 다릅니다")
    if mode == "product" and require_exact and chart.surface.kappa_max > 0.0:
        raise ExtensionModeError(
            f"product 모드는 휘어진 곡면({chart.surface.kind}, κ_max={chart.surface.kappa_max:.4g})에서 "
            f"발산 허용치 {config.TOL_DIV:g}를 만족할 수 없습니다. corrected 모드를 사용하세요"
        )
    return AmbientField(base=field, chart=chart, profile=profile, mode=mode, amplitude=field.amplitude)


# =============================================================================
# 데카르트 좌표 벡터장 (대조군, 수렴 차수 검사)
# =============================================================================
@dataclass
class CartesianField:
    """유클리드 좌표로 직접 주어진 벡터장"""

    label: str
    velocity_fn: Callable
    time_factor: Optional[Callable] = None

    @property
    def autonomous(self):
        return self.time_factor is None

    def __call__(self, points, t=0.0):
        out = self.velocity_fn(np.asarray(points, dtype=float))
        if self.time_factor is not None:
            out = out * self.time_factor(t)
        return out


def compressive_field():
    """대조군: V = −x ∂_x (발산 −1)"""

    def velocity(points):
        out = np.zeros_like(points)
        out[..., 0] = -points[..., 0]
        return out

    return CartesianField(label="compressive", velocity_fn=velocity)


def rotation_field(angular_speed=1.0):
    """z축 둘레 강체 회전 V = ω(−y, x, 0)"""
    omega = float(angular_speed)

    def velocity(points):
        out = np.zeros_like(points)
        out[..., 0] = -omega * points[..., 1]
        out[..., 1] = omega * points[..., 0]
        return out

    return CartesianField(label="rotation", velocity_fn=velocity)


def euclidean_divergence(field, points, t=0.0, step=None):
    """
    3차원 중심차분 발산 오라클 ∂_x Ṽ_x + ∂_y Ṽ_y + ∂_z Ṽ_z

    관상 근방 벡터장은 η의 도함수가 1/δ로 커지므로 스텝을 δ에 비례하게 잡습니다.
    """
    points = np.asarray(points, dtype=float)
    if step is None:
        if isinstance(field, AmbientField):
            step = config.DIVERGENCE_STEP_PER_DELTA * field.delta
        else:
            step = config.FD_DIVERGENCE_STEP
    total = np.zeros(points.shape[:-1])
    for axis in range(3):
        shift = np.zeros(3)
        shift[axis] = step
        forward = field(points + shift, t)[..., axis]
        backward = field(points - shift, t)[..., axis]
        total += (forward - backward) / (2.0 * step)
    return total
