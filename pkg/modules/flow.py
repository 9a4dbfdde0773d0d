"""
흐름 적분 모듈 - 벡터장으로부터 등위상(isotopy)을 적분하고 부피 보존을 감시합니다.

- 고전 4차 Runge–Kutta (차트 좌표 또는 데카르트 좌표)
- 변분 방정식 Y' = DF·Y 를 같은 스킴으로 적분해 야코비안을 추적
- 공간 야코비안 = det Y · 밀도(q_t)/밀도(q_0)  (밀도: 곡면 √det g, 관상 √det g·det DΦ)
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

import config
from modules.fields import AmbientField, CartesianField, TangentField
from modules.geometry import metric_at, sample_chart_points
from modules.utils import wrap_angle


class FlowDomainError(ValueError):
    """입자가 벡터장의 평가 가능 영역을 벗어난 경우"""


@dataclass
class FlowSystem:
    """적분 좌표계: 속도, 매장, 부피 밀도, 영역 검사"""

    label: str
    dim: int
    velocity: Callable
    embed: Callable
    density: Callable
    cartesian_velocity: Callable
    inside: Callable
    field: object
    chart_coordinates: bool = True

    @property
    def autonomous(self):
        return getattr(self.field, "autonomous", True)


@dataclass
class Isotopy:
    """
    시간 표본 흐름 사상

    coords: (K+1, P, d) 적분 좌표 궤적, points: (K+1, P, 3) 유클리드 궤적,
    jacobian: (K+1, P) 공간 야코비안 (추적하지 않았으면 None), speeds: (K+1, P) |V|
    """

    system: FlowSystem
    times: np.ndarray
    coords: np.ndarray
    points: np.ndarray
    jacobian: Optional[np.ndarray]
    speeds: np.ndarray

    @property
    def steps(self):
        return len(self.times) - 1

    @property
    def particle_count(self):
        return self.coords.shape[1]

    @property
    def final(self):
        return self.coords[-1]


# =============================================================================
# 좌표계 구성
# =============================================================================
def _range_mask(surface, q, slack=1e-9):
    mask = np.isfinite(q).all(axis=-1)
    for axis, bounds in enumerate((surface.u_range, surface.v_range)):
        if not surface.periodic[axis]:
            span = bounds[1] - bounds[0]
            mask &= (q[..., axis] >= bounds[0] - slack * span) & (q[..., axis] <= bounds[1] + slack * span)
    return mask


def surface_system(field):
    """곡면 차트 좌표 (u, v)"""
    surface = field.surface

    def velocity(q, t):
        return np.stack(field.components(q[..., 0], q[..., 1], t), axis=-1)

    return FlowSystem(
        label=f"surface:{field.label}",
        dim=2,
        velocity=velocity,
        embed=lambda q: surface.embed(q[..., 0], q[..., 1]),
        density=lambda q: metric_at(surface, q[..., 0], q[..., 1]).sqrt_det_g,
        cartesian_velocity=lambda q, t: field.cartesian(q[..., 0], q[..., 1], t),
        inside=lambda q: _range_mask(surface, q),
        field=field,
    )


def tube_system(field):
    """관상 좌표 (u, v, s)"""
    chart = field.chart
    surface = chart.surface

    def velocity(q, t):
        return np.stack(field.tube_components(q[..., 0], q[..., 1], q[..., 2], t), axis=-1)

    def density(q):
        root = metric_at(surface, q[..., 0], q[..., 1]).sqrt_det_g
        return root * chart.jacobian(q[..., 0], q[..., 1], q[..., 2])

    def inside(q):
        return _range_mask(surface, q) & (np.abs(q[..., 2]) <= chart.delta)

    return FlowSystem(
        label=f"tube:{field.base.label}:{field.mode}",
        dim=3,
        velocity=velocity,
        embed=lambda q: chart.map(q[..., 0], q[..., 1], q[..., 2]),
        density=density,
        cartesian_velocity=lambda q, t: field.at_chart(q[..., 0], q[..., 1], q[..., 2], t),
        inside=inside,
        field=field,
    )


def cartesian_system(field):
    """유클리드 좌표 (x, y, z)"""
    return FlowSystem(
        label=f"cartesian:{getattr(field, 'label', 'field')}",
        dim=3,
        velocity=lambda q, t: field(q, t),
        embed=lambda q: q.copy(),
        density=lambda q: np.ones(q.shape[:-1]),
        cartesian_velocity=lambda q, t: field(q, t),
        inside=lambda q: np.isfinite(q).all(axis=-1),
        field=field,
        chart_coordinates=False,
    )


def system_for(field):
    if isinstance(field, FlowSystem):
        return field
    if isinstance(field, TangentField):
        return surface_system(field)
    if isinstance(field, AmbientField):
        return tube_system(field)
    if isinstance(field, CartesianField):
        return cartesian_system(field)
    raise TypeError(f"적분할 수 없는 벡터장 형식: {type(field).__name__}")


def sample_particles(surface, count, seed=None, delta=None, tracer=None):
    """
    결정적 저불일치 입자 배치 (Halton, 시드 고정)

    tracer가 주어지면 0번 입자로 앞에 붙입니다.
    """
    seed = config.DEFAULT_SEED if seed is None else seed
    coords = sample_chart_points(surface, count, seed, delta=delta)
    particles = np.stack(coords, axis=-1)
    if tracer is not None:
        particles = np.vstack([np.asarray(tracer, dtype=float)[None, :], particles])
    return particles


def band_tracer(field, s=0.0):
    """띠 중앙, 순환 좌표 시작점의 추적 입자"""
    band = field.band if isinstance(field, TangentField) else field.base.band
    surface = field.surface
    loop_start = (surface.u_range, surface.v_range)[band.loop_axis][0]
    point = [0.0, 0.0]
    point[band.loop_axis] = loop_start
    point[band.band_axis] = band.center
    if isinstance(field, AmbientField):
        point.append(s)
    return np.asarray(point)


# =============================================================================
# 적분
# =============================================================================
def _velocity_gradient(system, q, t, h):
    """DF(q)를 중심차분으로 계산합니다. 반환 모양 (P, d, d)"""
    columns = []
    for axis in range(system.dim):
        shift = np.zeros(system.dim)
        shift[axis] = h
        columns.append((system.velocity(q + shift, t) - system.velocity(q - shift, t)) / (2.0 * h))
    return np.stack(columns, axis=-1)


def _required_steps(field):
    amplitude = abs(getattr(field, "amplitude", 0.0) or 0.0)
    return config.MIN_STEPS_PER_TURN * math.ceil(amplitude)


def integrate_isotopy(field, particles, steps, t0=0.0, t1=1.0, track_jacobian=True):
    """
    입자 흐름을 적분합니다.

    Args:
        field: TangentField / AmbientField / CartesianField 또는 FlowSystem
        particles: (P, d) 적분 좌표 초기값
        steps: 시간 스텝 수 K (K ≥ 64·N)
        t0, t1: 시간 구간
        track_jacobian: 변분 방정식을 함께 적분할지 여부

    Returns:
        Isotopy

    Raises:
        FlowDomainError: 입자가 영역을 벗어나면 입자 번호와 시각을 알려줍니다.
    """
    system = system_for(field)
    steps = int(steps)
    required = _required_steps(system.field)
    if steps < 1 or steps < required:
        raise ValueError(f"스텝 수가 부족합니다: K={steps} (올림 안전 조건 K ≥ {required})")

    q = np.array(particles, dtype=float, copy=True)
    if q.ndim != 2 or q.shape[1] != system.dim:
        raise ValueError(f"입자 배열 모양은 (P, {system.dim})이어야 합니다: {q.shape}")
    count = q.shape[0]
    dt = (t1 - t0) / steps
    h = config.FD_GRADIENT_STEP
    eye = np.broadcast_to(np.eye(system.dim), (count, system.dim, system.dim))
    y = np.array(eye, copy=True)

    times = t0 + dt * np.arange(steps + 1)
    coords = np.empty((steps + 1, count, system.dim))
    dets = np.empty((steps + 1, count)) if track_jacobian else None
    coords[0] = q
    if track_jacobian:
        dets[0] = 1.0

    def rhs(state_q, state_y, t):
        dq = system.velocity(state_q, t)
        if not track_jacobian:
            return dq, None
        return dq, _velocity_gradient(system, state_q, t, h) @ state_y

    _check_inside(system, q, t0)
    for k in range(steps):
        t = times[k]
        k1q, k1y = rhs(q, y, t)
        k2q, k2y = rhs(q + 0.5 * dt * k1q, None if k1y is None else y + 0.5 * dt * k1y, t + 0.5 * dt)
        k3q, k3y = rhs(q + 0.5 * dt * k2q, None if k2y is None else y + 0.5 * dt * k2y, t + 0.5 * dt)
        k4q, k4y = rhs(q + dt * k3q, None if k3y is None else y + dt * k3y, t + dt)
        q = q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        if track_jacobian:
            y = y + (dt / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            dets[k + 1] = np.linalg.det(y)
        _check_inside(system, q, times[k + 1])
        coords[k + 1] = q

    flat = coords.reshape(-1, system.dim)
    points = system.embed(flat).reshape(steps + 1, count, 3)
    speed_rows = []
    for k in range(steps + 1):
        speed_rows.append(np.linalg.norm(system.cartesian_velocity(coords[k], times[k]), axis=-1))
    speeds = np.stack(speed_rows)

    jacobian = None
    if track_jacobian:
        density = system.density(flat).reshape(steps + 1, count)
        jacobian = dets * density / density[0]

    logging.info(f"✅ 흐름 적분 완료: {system.label}, 입자 {count}개, K={steps}, t∈[{t0:.4f}, {t1:.4f}]")
    return Isotopy(system=system, times=times, coords=coords, points=points, jacobian=jacobian, speeds=speeds)


def _check_inside(system, q, t):
    mask = system.inside(q)
    if not np.all(mask):
        index = int(np.argmin(mask))
        raise FlowDomainError(
            f"입자 {index}이(가) 시각 t={t:.6f}에 벡터장 영역을 벗어났습니다: 좌표 {np.round(q[index], 8).tolist()}"
        )


def concatenate(first, second):
    """같은 입자 집합의 연속된 두 구간 흐름을 이어붙입니다."""
    if not np.allclose(first.coords[-1], second.coords[0], rtol=0.0, atol=1e-12):
        raise ValueError("두 흐름의 접합점이 일치하지 않습니다")
    jacobian = None
    if first.jacobian is not None and second.jacobian is not None:
        jacobian = np.concatenate([first.jacobian, first.jacobian[-1] * second.jacobian[1:]])
    return Isotopy(
        system=first.system,
        times=np.concatenate([first.times, second.times[1:]]),
        coords=np.concatenate([first.coords, second.coords[1:]]),
        points=np.concatenate([first.points, second.points[1:]]),
        jacobian=jacobian,
        speeds=np.concatenate([first.speeds, second.speeds[1:]]),
    )


# =============================================================================
# 부피 보존, 정지하지 않음
# =============================================================================
def volume_defect(iso):
    """max_{p, t} |det D(flow) − 1|"""
    if iso.jacobian is None:
        raise ValueError("야코비안을 추적하지 않은 흐름입니다 (track_jacobian=True 필요)")
    defect = float(np.max(np.abs(iso.jacobian - 1.0)))
    logging.info(f"📊 부피 결손: {defect:.3e} ({iso.system.label})")
    return defect


def never_stops(iso, circle_map, tracer=0):
    """
    흐름이 멈추거나 이전 배치로 되돌아가지 않는지 검사합니다.

    조건: 모든 시각에서 max_p |V| > 0 이고, 추적 입자의 올림 각이 t에 대해 순증가.

    Returns:
        (passed, margin, min_speed); margin은 올림 각 증가율의 최솟값
    """
    angles = circle_map.of_isotopy(iso)[:, tracer]
    increments = wrap_angle(np.diff(angles))
    rates = increments / np.diff(iso.times)
    margin = float(np.min(rates)) if rates.size else 0.0
    min_speed = float(np.min(np.max(iso.speeds, axis=1)))
    passed = bool(min_speed > 0.0 and margin > 0.0)
    mark = "✅" if passed else "⚠️"
    logging.info(f"{mark} 정지 없음 검사: {passed} (증가율 최소 {margin:.6e}, 최소 속도 {min_speed:.6e})")
    return passed, margin, min_speed
