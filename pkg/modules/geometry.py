"""
기하 모듈 - 유클리드 3차원 공간에 등거리 매장된 곡면

- 매개변수 곡면: 회전 토러스, 평면 띠, 평면 고리, 구면, 음함수 곡면
- 유도 계량 (제1기본형식), 단위 법선 ν = X_u × X_v / |X_u × X_v|, 주곡률
- 관상 근방 좌표 Φ(x_h, s) = x_h + s·ν(x_h) 와 야코비안 det DΦ = Π(1 − s·κ_i)
- 구적 격자: 주기 방향 사다리꼴, 비주기 방향 중점, 법선 방향 구간별 Gauss–Legendre
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.stats import qmc

import config


class NonImmersionError(ValueError):
    """제1기본형식이 양의 정부호가 아닌 노드가 있는 경우"""


class TubularWidthError(ValueError):
    """관상 근방 폭 δ가 단사성 허용 한계를 넘는 경우"""


# =============================================================================
# 데이터 타입
# =============================================================================
@dataclass
class EmbeddedSurface:
    """
    매개변수 영역 [u_range] × [v_range] 위의 매장 곡면

    embed_fn은 (u, v) 배열을 (..., 3) 점 배열로 보냅니다. tangent_fn / hessian_fn이
    있으면 해석적 도함수를 쓰고, 없으면 중심차분을 씁니다.
    """

    kind: str
    params: Dict[str, float]
    u_range: Tuple[float, float]
    v_range: Tuple[float, float]
    periodic: Tuple[bool, bool]
    kappa_max: float
    embed_fn: Callable
    inverse_fn: Callable
    tangent_fn: Optional[Callable] = None
    hessian_fn: Optional[Callable] = None
    length_scale: float = 1.0

    @property
    def analytic(self):
        return self.tangent_fn is not None

    @property
    def chart_scale(self):
        return max(self.u_range[1] - self.u_range[0], self.v_range[1] - self.v_range[0])

    def embed(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        return self.embed_fn(u, v)


@dataclass
class MetricSample:
    """노드별 제1기본형식 g, det g, g⁻¹, 단위 법선 ν (X_u, X_v 포함)"""

    g: np.ndarray
    det_g: np.ndarray
    g_inv: np.ndarray
    normal: np.ndarray
    xu: np.ndarray
    xv: np.ndarray

    @property
    def sqrt_det_g(self):
        return np.sqrt(self.det_g)


@dataclass
class TubularChart:
    """
    반폭 δ의 관상 근방 좌표 Φ(u, v, s) = X(u, v) + s·ν(u, v), s ∈ [−δ, δ]
    """

    surface: EmbeddedSurface
    delta: float

    def map(self, u, v, s):
        """관상 좌표 (u, v, s) → 유클리드 점"""
        sample = metric_at(self.surface, u, v)
        s = np.asarray(s, dtype=float)
        return self.surface.embed(u, v) + s[..., None] * sample.normal

    def jacobian(self, u, v, s):
        """곡률 보정 야코비안 det(I − s·S) (s = 0에서 정확히 1)"""
        shape = shape_operator(self.surface, u, v)
        s = np.asarray(s, dtype=float)
        trace = shape[..., 0, 0] + shape[..., 1, 1]
        det = shape[..., 0, 0] * shape[..., 1, 1] - shape[..., 0, 1] * shape[..., 1, 0]
        return 1.0 - s * trace + s * s * det

    def jacobian_product(self, u, v, s):
        """주곡률 곱 Π(1 − s·κ_i)"""
        kappa = principal_curvatures(self.surface, u, v)
        s = np.asarray(s, dtype=float)
        return (1.0 - s * kappa[..., 0]) * (1.0 - s * kappa[..., 1])

    def idealized_jacobian(self, u, v, s):
        """블록 계량 diag(g, I)을 그대로 쓴 이상화 야코비안 (항상 1)"""
        u, v, s = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float), np.asarray(s, float))
        return np.ones_like(s)

    def inverse(self, points):
        """유클리드 점 → 관상 좌표 (u, v, s)"""
        return inverse_chart(self.surface, points)

    def contains(self, s, fraction=1.0):
        return np.abs(np.asarray(s, dtype=float)) <= fraction * self.delta


@dataclass
class QuadratureMesh:
    """
    곡면 구적 격자

    노드는 (u 인덱스, v 인덱스) 사전식 순서로 펼쳐져 있으며 가중치에는 √det g가
    포함되어 있습니다. normal_nodes가 있으면 관상 적분용 법선 방향 노드입니다.
    """

    surface: EmbeddedSurface
    resolution: Tuple[int, int]
    u: np.ndarray
    v: np.ndarray
    weights: np.ndarray
    spacing: Tuple[float, float]
    metric: MetricSample
    rules: Tuple[str, str] = ("trapezoid", "trapezoid")

    @property
    def area(self):
        return float(np.sum(self.weights))

    @property
    def count(self):
        return int(self.u.size)


@dataclass
class TubeMesh:
    """관상 근방 구적 격자: 곡면 격자 × 법선 노드, 가중치 = w_surface · w_s · det DΦ"""

    chart: TubularChart
    surface_mesh: QuadratureMesh
    u: np.ndarray
    v: np.ndarray
    s: np.ndarray
    weights: np.ndarray
    idealized_weights: np.ndarray
    normal_nodes: np.ndarray
    normal_weights: np.ndarray

    @property
    def volume(self):
        return float(np.sum(self.weights))


# =============================================================================
# 도함수, 계량, 곡률
# =============================================================================
def tangents(surface, u, v, force_fd=False):
    """
    매장 사상의 1계 도함수 (X_u, X_v)

    해석적 도함수가 있으면 사용하고, 없거나 force_fd=True이면 스텝
    h_fd = FD_STEP_RELATIVE × chart scale 의 중심차분을 씁니다.
    """
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    if surface.tangent_fn is not None and not force_fd:
        return surface.tangent_fn(u, v)

    h = config.FD_STEP_RELATIVE * surface.chart_scale
    xu = (surface.embed_fn(u + h, v) - surface.embed_fn(u - h, v)) / (2.0 * h)
    xv = (surface.embed_fn(u, v + h) - surface.embed_fn(u, v - h)) / (2.0 * h)
    return xu, xv


def second_derivatives(surface, u, v):
    """매장 사상의 2계 도함수 (X_uu, X_uv, X_vv)"""
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    if surface.hessian_fn is not None:
        return surface.hessian_fn(u, v)

    h = config.FD_CURVATURE_STEP_RELATIVE * surface.chart_scale
    f = surface.embed_fn
    center = f(u, v)
    xuu = (f(u + h, v) - 2.0 * center + f(u - h, v)) / (h * h)
    xvv = (f(u, v + h) - 2.0 * center + f(u, v - h)) / (h * h)
    xuv = (f(u + h, v + h) - f(u + h, v - h) - f(u - h, v + h) + f(u - h, v - h)) / (4.0 * h * h)
    return xuu, xuv, xvv


def metric_at(surface, u, v, force_fd=False):
    """
    (u, v)에서의 유도 계량

    Args:
        surface: EmbeddedSurface
        u, v: 매개변수 (스칼라 또는 같은 모양의 배열)
        force_fd: 해석적 도함수가 있어도 중심차분 사용

    Returns:
        MetricSample

    Raises:
        NonImmersionError: det g ≤ 0 인 노드가 있으면 해당 (u, v)를 알려줍니다.
    """
    xu, xv = tangents(surface, u, v, force_fd=force_fd)
    g11 = np.sum(xu * xu, axis=-1)
    g12 = np.sum(xu * xv, axis=-1)
    g22 = np.sum(xv * xv, axis=-1)
    det_g = g11 * g22 - g12 * g12

    floor = 1e-14 * surface.length_scale ** 4
    bad = ~(det_g > floor)
    if np.any(bad):
        uu, vv = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        index = np.argwhere(np.atleast_1d(bad))[0]
        bad_u = float(np.atleast_1d(uu)[tuple(index)])
        bad_v = float(np.atleast_1d(vv)[tuple(index)])
        raise NonImmersionError(
            f"매장 사상이 몰입이 아닙니다: {surface.kind} (u={bad_u:.6g}, v={bad_v:.6g})에서 det g ≤ 0"
        )

    g = np.stack([np.stack([g11, g12], axis=-1), np.stack([g12, g22], axis=-1)], axis=-2)
    g_inv = np.stack(
        [np.stack([g22, -g12], axis=-1), np.stack([-g12, g11], axis=-1)], axis=-2
    ) / det_g[..., None, None]
    cross = np.cross(xu, xv)
    normal = cross / np.linalg.norm(cross, axis=-1, keepdims=True)
    return MetricSample(g=g, det_g=det_g, g_inv=g_inv, normal=normal, xu=xu, xv=xv)


def shape_operator(surface, u, v):
    """형태 연산자 S = g⁻¹·II, II_ij = X_ij · ν (ν_i = −S X_i 규약)"""
    sample = metric_at(surface, u, v)
    xuu, xuv, xvv = second_derivatives(surface, u, v)
    nu = sample.normal
    l11 = np.sum(xuu * nu, axis=-1)
    l12 = np.sum(xuv * nu, axis=-1)
    l22 = np.sum(xvv * nu, axis=-1)
    second = np.stack([np.stack([l11, l12], axis=-1), np.stack([l12, l22], axis=-1)], axis=-2)
    return sample.g_inv @ second


def principal_curvatures(surface, u, v):
    """주곡률 (κ_1 ≥ κ_2), 마지막 축 길이 2"""
    shape = shape_operator(surface, u, v)
    mean = 0.5 * (shape[..., 0, 0] + shape[..., 1, 1])
    gauss = shape[..., 0, 0] * shape[..., 1, 1] - shape[..., 0, 1] * shape[..., 1, 0]
    root = np.sqrt(np.maximum(mean * mean - gauss, 0.0))
    return np.stack([mean + root, mean - root], axis=-1)


# =============================================================================
# 관상 근방
# =============================================================================
def tube_width_bound(surface):
    """단사성 허용 한계 δ ≤ 0.1/κ_max (평면이면 무한대)"""
    if surface.kappa_max <= 0.0:
        return math.inf
    return config.TUBE_ADMISSIBILITY / surface.kappa_max


def tubular_chart(surface, delta):
    """
    반폭 δ의 관상 근방 좌표를 만듭니다.

    Raises:
        TubularWidthError: δ ≤ 0 이거나 δ > 0.1/κ_max 인 경우
    """
    bound = tube_width_bound(surface)
    if not delta > 0.0:
        raise TubularWidthError(f"관상 근방 폭은 양수여야 합니다: δ={delta}")
    if delta > bound * (1.0 + 1e-12):
        raise TubularWidthError(
            f"관상 근방 폭 δ={delta:.6g}이 너무 큽니다: {surface.kind}에서는 δ ≤ {bound:.6g} (= 0.1/κ_max) 필요"
        )
    logging.info(f"✅ 관상 근방 생성: {surface.kind}, δ={delta:.6g} (허용 한계 {bound:.6g})")
    return TubularChart(surface=surface, delta=float(delta))


def fd_volume_jacobian(chart, u, v, s, h=1e-6):
    """
    유한차분 부피 오라클: det[Φ_u, Φ_v, Φ_s] / √det g

    곡률 보정 야코비안 det(I − s·S)와 독립적인 경로로 계산합니다.
    """
    u, v, s = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float), np.asarray(s, float))
    phi_u = (chart.map(u + h, v, s) - chart.map(u - h, v, s)) / (2.0 * h)
    phi_v = (chart.map(u, v + h, s) - chart.map(u, v - h, s)) / (2.0 * h)
    phi_s = (chart.map(u, v, s + h) - chart.map(u, v, s - h)) / (2.0 * h)
    volume = np.linalg.det(np.stack([phi_u, phi_v, phi_s], axis=-1))
    return volume / metric_at(chart.surface, u, v).sqrt_det_g


def inverse_chart(surface, points):
    """
    유클리드 점을 관상 좌표 (u, v, s)로 보냅니다 (최근접점 사영 π와 법선 거리).

    Returns:
        (u, v, s) 배열 튜플
    """
    points = np.asarray(points, dtype=float)
    return surface.inverse_fn(points)


def _newton_inverse(surface, points, guess, iterations=None):
    """Φ(u, v, s) = x 를 뉴턴 반복으로 풉니다 (야코비안은 중심차분)."""
    iterations = iterations or config.NEWTON_ITERATIONS
    q = np.stack(guess, axis=-1).astype(float)
    h = 1e-6

    def phi(q):
        sample = metric_at(surface, q[..., 0], q[..., 1])
        return surface.embed(q[..., 0], q[..., 1]) + q[..., 2:3] * sample.normal

    for _ in range(iterations):
        residual = phi(q) - points
        columns = []
        for axis in range(3):
            step = np.zeros(3)
            step[axis] = h
            columns.append((phi(q + step) - phi(q - step)) / (2.0 * h))
        jac = np.stack(columns, axis=-1)
        q = q - np.linalg.solve(jac, residual[..., None])[..., 0]
    return q[..., 0], q[..., 1], q[..., 2]


# =============================================================================
# 곡면 생성
# =============================================================================
def make_torus(major_radius=2.0, minor_radius=1.0):
    """
    회전 토러스 X(u, v) = ((A + a cos u) cos v, (A + a cos u) sin v, a sin u)

    u는 자오선 각 (관을 도는 방향), v는 z축을 도는 경도 각입니다.
    """
    big, small = float(major_radius), float(minor_radius)
    if not big > small > 0.0:
        raise ValueError(f"토러스 반지름 조건 A > a > 0 위반: A={big}, a={small}")

    def embed(u, v):
        ring = big + small * np.cos(u)
        return np.stack([ring * np.cos(v), ring * np.sin(v), small * np.sin(u)], axis=-1)

    def tangent(u, v):
        ring = big + small * np.cos(u)
        xu = np.stack([-small * np.sin(u) * np.cos(v), -small * np.sin(u) * np.sin(v), small * np.cos(u)], axis=-1)
        xv = np.stack([-ring * np.sin(v), ring * np.cos(v), np.zeros_like(u)], axis=-1)
        return xu, xv

    def hessian(u, v):
        ring = big + small * np.cos(u)
        zero = np.zeros_like(u)
        xuu = np.stack([-small * np.cos(u) * np.cos(v), -small * np.cos(u) * np.sin(v), -small * np.sin(u)], axis=-1)
        xuv = np.stack([small * np.sin(u) * np.sin(v), -small * np.sin(u) * np.cos(v), zero], axis=-1)
        xvv = np.stack([-ring * np.cos(v), -ring * np.sin(v), zero], axis=-1)
        return xuu, xuv, xvv

    def inverse(points):
        x, y, z = points[..., 0], points[..., 1], points[..., 2]
        rho = np.hypot(x, y) - big
        v = np.mod(np.arctan2(y, x), 2.0 * math.pi)
        u = np.mod(np.arctan2(z, rho), 2.0 * math.pi)
        s = small - np.hypot(rho, z)
        return u, v, s

    return EmbeddedSurface(
        kind="torus_revolution",
        params={"major_radius": big, "minor_radius": small},
        u_range=(0.0, 2.0 * math.pi),
        v_range=(0.0, 2.0 * math.pi),
        periodic=(True, True),
        kappa_max=max(1.0 / small, 1.0 / (big - small)),
        embed_fn=embed,
        inverse_fn=inverse,
        tangent_fn=tangent,
        hessian_fn=hessian,
        length_scale=big + small,
    )


def make_flat_strip(length_u=1.0, length_v=1.0, periodic_v=True):
    """평면 띠 (u, v) → (u, v, 0); v 방향은 주기적으로 둘 수 있습니다."""
    length_u, length_v = float(length_u), float(length_v)

    def embed(u, v):
        return np.stack([u, v, np.zeros_like(u)], axis=-1)

    def tangent(u, v):
        one, zero = np.ones_like(u), np.zeros_like(u)
        return np.stack([one, zero, zero], axis=-1), np.stack([zero, one, zero], axis=-1)

    def hessian(u, v):
        zero = np.zeros(u.shape + (3,))
        return zero, zero, zero

    def inverse(points):
        v = points[..., 1]
        if periodic_v:
            v = np.mod(v, length_v)
        return points[..., 0].copy(), v, points[..., 2].copy()

    return EmbeddedSurface(
        kind="flat_strip",
        params={"length_u": length_u, "length_v": length_v},
        u_range=(0.0, length_u),
        v_range=(0.0, length_v),
        periodic=(False, bool(periodic_v)),
        kappa_max=0.0,
        embed_fn=embed,
        inverse_fn=inverse,
        tangent_fn=tangent,
        hessian_fn=hessian,
        length_scale=max(length_u, length_v),
    )


def make_flat_annulus(inner_radius=1.0, outer_radius=2.0):
    """평면 고리 (r, θ) → (r cos θ, r sin θ, 0), r ∈ [r₀, r₁]"""
    r0, r1 = float(inner_radius), float(outer_radius)
    if not r1 > r0 > 0.0:
        raise ValueError(f"고리 반지름 조건 0 < r₀ < r₁ 위반: r₀={r0}, r₁={r1}")

    def embed(u, v):
        return np.stack([u * np.cos(v), u * np.sin(v), np.zeros_like(u)], axis=-1)

    def tangent(u, v):
        zero = np.zeros_like(u)
        xu = np.stack([np.cos(v), np.sin(v), zero], axis=-1)
        xv = np.stack([-u * np.sin(v), u * np.cos(v), zero], axis=-1)
        return xu, xv

    def hessian(u, v):
        zero = np.zeros_like(u)
        xuu = np.zeros(u.shape + (3,))
        xuv = np.stack([-np.sin(v), np.cos(v), zero], axis=-1)
        xvv = np.stack([-u * np.cos(v), -u * np.sin(v), zero], axis=-1)
        return xuu, xuv, xvv

    def inverse(points):
        x, y, z = points[..., 0], points[..., 1], points[..., 2]
        return np.hypot(x, y), np.mod(np.arctan2(y, x), 2.0 * math.pi), z.copy()

    return EmbeddedSurface(
        kind="flat_annulus",
        params={"inner_radius": r0, "outer_radius": r1},
        u_range=(r0, r1),
        v_range=(0.0, 2.0 * math.pi),
        periodic=(False, True),
        kappa_max=0.0,
        embed_fn=embed,
        inverse_fn=inverse,
        tangent_fn=tangent,
        hessian_fn=hessian,
        length_scale=r1,
    )


def make_sphere(radius=1.0, latitude_max=0.5 * math.pi):
    """구면 X(u, v) = R(cos u cos v, cos u sin v, sin u), u = 위도, v = 경도"""
    big = float(radius)
    lat = float(latitude_max)

    def embed(u, v):
        return big * np.stack([np.cos(u) * np.cos(v), np.cos(u) * np.sin(v), np.sin(u)], axis=-1)

    def tangent(u, v):
        xu = big * np.stack([-np.sin(u) * np.cos(v), -np.sin(u) * np.sin(v), np.cos(u)], axis=-1)
        xv = big * np.stack([-np.cos(u) * np.sin(v), np.cos(u) * np.cos(v), np.zeros_like(u)], axis=-1)
        return xu, xv

    def hessian(u, v):
        xuu = -embed(u, v)
        xuv = big * np.stack([np.sin(u) * np.sin(v), -np.sin(u) * np.cos(v), np.zeros_like(u)], axis=-1)
        xvv = big * np.stack([-np.cos(u) * np.cos(v), -np.cos(u) * np.sin(v), np.zeros_like(u)], axis=-1)
        return xuu, xuv, xvv

    def inverse(points):
        r = np.linalg.norm(points, axis=-1)
        u = np.arcsin(np.clip(points[..., 2] / r, -1.0, 1.0))
        v = np.mod(np.arctan2(points[..., 1], points[..., 0]), 2.0 * math.pi)
        return u, v, big - r

    return EmbeddedSurface(
        kind="sphere",
        params={"radius": big, "latitude_max": lat},
        u_range=(-lat, lat),
        v_range=(0.0, 2.0 * math.pi),
        periodic=(False, True),
        kappa_max=1.0 / big,
        embed_fn=embed,
        inverse_fn=inverse,
        tangent_fn=tangent,
        hessian_fn=hessian,
        length_scale=big,
    )


def _level_function(level, major_radius, minor_radius, vertical_radius):
    """음함수 F와 기울기 ∇F"""
    big, small, tall = major_radius, minor_radius, vertical_radius
    if level == "torus":
        tall = small
    elif level != "squashed_torus":
        raise ValueError(f"지원하지 않는 음함수 곡면: {level} (가능: {config.AVAILABLE_IMPLICIT_LEVELS})")

    def value(x):
        rho = np.hypot(x[..., 0], x[..., 1])
        return (rho - big) ** 2 / small ** 2 + x[..., 2] ** 2 / tall ** 2 - 1.0

    def gradient(x):
        rho = np.hypot(x[..., 0], x[..., 1])
        radial = 2.0 * (rho - big) / (small ** 2 * rho)
        return np.stack([radial * x[..., 0], radial * x[..., 1], 2.0 * x[..., 2] / tall ** 2], axis=-1)

    return value, gradient


def make_implicit(level="squashed_torus", major_radius=2.0, minor_radius=1.0, vertical_radius=0.8):
    """
    음함수 곡면 F = 0 을 토러스 좌표의 사영으로 표본화합니다.

    토러스 점 X₀(u, v)에서 시작해 x ← x − F∇F/|∇F|² 를 반복합니다. 도함수와
    곡률은 중심차분으로 계산하고, κ_max는 48×48 격자 표본 최댓값의 1.1배입니다.
    """
    seed = make_torus(major_radius, minor_radius)
    value, gradient = _level_function(level, float(major_radius), float(minor_radius), float(vertical_radius))

    def embed(u, v):
        x = seed.embed_fn(u, v)
        for _ in range(config.PROJECTION_ITERATIONS):
            grad = gradient(x)
            x = x - (value(x) / np.sum(grad * grad, axis=-1))[..., None] * grad
        return x

    surface = EmbeddedSurface(
        kind="implicit",
        params={
            "level": level,
            "major_radius": float(major_radius),
            "minor_radius": float(minor_radius),
            "vertical_radius": float(vertical_radius),
        },
        u_range=seed.u_range,
        v_range=seed.v_range,
        periodic=(True, True),
        kappa_max=0.0,
        embed_fn=embed,
        inverse_fn=None,
        length_scale=seed.length_scale,
    )

    def inverse(points):
        u0, v0, _ = seed.inverse_fn(points)
        foot = surface.embed(u0, v0)
        s0 = np.sum((points - foot) * metric_at(surface, u0, v0).normal, axis=-1)
        u, v, s = _newton_inverse(surface, points, (u0, v0, s0))
        return np.mod(u, 2.0 * math.pi), np.mod(v, 2.0 * math.pi), s

    surface.inverse_fn = inverse
    grid = np.linspace(0.0, 2.0 * math.pi, 48, endpoint=False)
    uu, vv = np.meshgrid(grid, grid, indexing="ij")
    kappa = principal_curvatures(surface, uu, vv)
    surface.kappa_max = 1.1 * float(np.max(np.abs(kappa)))
    logging.info(f"📊 음함수 곡면 {level}: κ_max ≈ {surface.kappa_max:.4f}")
    return surface


def homothety(surface, scale, center=(0.0, 0.0, 0.0)):
    """
    닮음 변환 O(x) = center + λ·x 를 적용한 곡면 (매개변수 영역은 그대로)
    """
    lam = float(scale)
    if not lam > 0.0:
        raise ValueError(f"닮음비는 양수여야 합니다: λ={scale}")
    shift = np.asarray(center, dtype=float)
    base = surface

    def embed(u, v):
        return shift + lam * base.embed_fn(u, v)

    def inverse(points):
        u, v, s = base.inverse_fn((points - shift) / lam)
        return u, v, lam * s

    tangent = None
    hessian = None
    if base.tangent_fn is not None:
        def tangent(u, v):
            xu, xv = base.tangent_fn(u, v)
            return lam * xu, lam * xv
    if base.hessian_fn is not None:
        def hessian(u, v):
            return tuple(lam * d for d in base.hessian_fn(u, v))

    params = dict(base.params)
    params["homothety"] = lam * float(base.params.get("homothety", 1.0))
    return EmbeddedSurface(
        kind=base.kind,
        params=params,
        u_range=base.u_range,
        v_range=base.v_range,
        periodic=base.periodic,
        kappa_max=base.kappa_max / lam,
        embed_fn=embed,
        inverse_fn=inverse,
        tangent_fn=tangent,
        hessian_fn=hessian,
        length_scale=lam * base.length_scale,
    )


# =============================================================================
# 구적
# =============================================================================
def _axis_nodes(lo, hi, count, periodic):
    """주기 방향은 사다리꼴 (왼쪽 끝점), 비주기 방향은 중점 노드"""
    h = (hi - lo) / count
    offset = 0.0 if periodic else 0.5
    return lo + (np.arange(count) + offset) * h, h


def build_quadrature(surface, resolution):
    """
    텐서곱 구적 격자를 만듭니다.

    Args:
        surface: EmbeddedSurface
        resolution: 방향별 노드 수 (정수 하나 또는 (n_u, n_v))

    Returns:
        QuadratureMesh (가중치 = h_u·h_v·√det g)
    """
    if np.isscalar(resolution):
        resolution = (int(resolution), int(resolution))
    n_u, n_v = int(resolution[0]), int(resolution[1])
    for count, periodic, name in ((n_u, surface.periodic[0], "u"), (n_v, surface.periodic[1], "v")):
        if periodic and count < config.MIN_PERIODIC_NODES:
            raise ValueError(
                f"주기 방향 {name}의 노드 수는 {config.MIN_PERIODIC_NODES} 이상이어야 합니다: {count}"
            )
        if count < 1:
            raise ValueError(f"노드 수는 양수여야 합니다: {name}={count}")

    u_axis, h_u = _axis_nodes(*surface.u_range, n_u, surface.periodic[0])
    v_axis, h_v = _axis_nodes(*surface.v_range, n_v, surface.periodic[1])
    uu, vv = np.meshgrid(u_axis, v_axis, indexing="ij")
    u, v = uu.ravel(), vv.ravel()
    sample = metric_at(surface, u, v)
    weights = h_u * h_v * sample.sqrt_det_g
    rules = tuple("trapezoid" if p else "midpoint" for p in surface.periodic)
    return QuadratureMesh(
        surface=surface,
        resolution=(n_u, n_v),
        u=u,
        v=v,
        weights=weights,
        spacing=(h_u, h_v),
        metric=sample,
        rules=rules,
    )


def normal_quadrature(delta, nodes_per_piece=None):
    """
    [−δ, δ] 위의 구간별 Gauss–Legendre 노드

    절단 함수의 접합점 ±δ/2, ±3δ/4에서 구간을 나누므로 각 구간에서 η²·det DΦ는
    다항식이고 적분은 정확합니다.
    """
    count = nodes_per_piece or config.NORMAL_NODES_PER_PIECE
    breaks = delta * np.array([-1.0, -0.75, -0.5, 0.5, 0.75, 1.0])
    x, w = leggauss(count)
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (b + a))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def build_tube_quadrature(chart, resolution, nodes_per_piece=None):
    """관상 근방 구적 격자 (곡면 노드 × 법선 노드)"""
    mesh = build_quadrature(chart.surface, resolution)
    s_nodes, s_weights = normal_quadrature(chart.delta, nodes_per_piece)
    u = np.repeat(mesh.u, s_nodes.size)
    v = np.repeat(mesh.v, s_nodes.size)
    s = np.tile(s_nodes, mesh.count)
    base = np.repeat(mesh.weights, s_nodes.size) * np.tile(s_weights, mesh.count)
    jac = chart.jacobian(u, v, s)
    if np.any(jac <= 0.0):
        raise TubularWidthError(f"관상 근방 야코비안이 양수가 아닙니다 (δ={chart.delta})")
    return TubeMesh(
        chart=chart,
        surface_mesh=mesh,
        u=u,
        v=v,
        s=s,
        weights=base * jac,
        idealized_weights=base * chart.idealized_jacobian(u, v, s),
        normal_nodes=s_nodes,
        normal_weights=s_weights,
    )


def sample_chart_points(surface, count, seed, delta=None):
    """
    결정적 저불일치 (Halton) 표본점

    Returns:
        delta가 없으면 (u, v), 있으면 (u, v, s) 배열 튜플. 순서는 고정됩니다.
    """
    dims = 2 if delta is None else 3
    sampler = qmc.Halton(d=dims, scramble=True, seed=int(seed))
    unit = sampler.random(int(count))
    lo = [surface.u_range[0], surface.v_range[0]]
    hi = [surface.u_range[1], surface.v_range[1]]
    if delta is not None:
        lo.append(-delta)
        hi.append(delta)
    scaled = qmc.scale(unit, lo, hi)
    return tuple(scaled[:, k] for k in range(dims))


def build_surface(kind, **params):
    """설정 값으로 곡면을 만듭니다."""
    if kind == "torus_revolution":
        return make_torus(params.get("major_radius", 2.0), params.get("minor_radius", 1.0))
    if kind == "flat_strip":
        return make_flat_strip(params.get("length_u", 1.0), params.get("length_v", 1.0))
    if kind == "flat_annulus":
        return make_flat_annulus(params.get("inner_radius", 1.0), params.get("outer_radius", 2.0))
    if kind == "sphere":
        return make_sphere(params.get("radius", 1.0))
    if kind == "implicit":
        return make_implicit(
            params.get("level", "squashed_torus"),
            params.get("major_radius", 2.0),
            params.get("minor_radius", 1.0),
            params.get("vertical_radius", 0.8),
        )
    raise ValueError(f"지원하지 않는 곡면 종류: {kind} (가능: {config.AVAILABLE_SURFACE_KINDS})")
