"""
질량 흐름 모듈 - 원 값 시험 사상 f: M → T¹ 에 대한 질량 흐름 θ̃ 와 플럭스 쌍대

θ̃({h_t})(f) = ∫_M (f∘h₁ − f 의 연속 올림) dμ
플럭스 쌍대: ∫_0^1 ∫_M df(V_t) dμ dt  (두 값은 같아야 함)
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

import config
from modules.geometry import inverse_chart, metric_at
from modules.utils import CheckResult, wrap_angle


class LiftSafetyError(ValueError):
    """한 스텝의 각도 변화가 너무 커서 올림이 모호한 경우"""


@dataclass
class CircleMap:
    """
    차트의 주기 좌표를 각도로 본 원 값 사상 f = 2π(q_axis − lo)/period

    winding은 기저 고리 (u 고리, v 고리)를 따라 f가 감기는 횟수입니다.
    """

    surface: object
    axis: int
    lo: float
    period: float
    label: str = ""
    winding: Tuple[int, int] = field(default=(0, 0))

    def of_coords(self, q):
        q = np.asarray(q, dtype=float)
        return wrap_angle(2.0 * math.pi * (q[..., self.axis] - self.lo) / self.period)

    def of_points(self, points):
        coords = inverse_chart(self.surface, points)
        return wrap_angle(2.0 * math.pi * (coords[self.axis] - self.lo) / self.period)

    def of_isotopy(self, iso):
        """흐름의 모든 시각에서 f 값 (K+1, P)"""
        if iso.system.chart_coordinates:
            return self.of_coords(iso.coords)
        return self.of_points(iso.points)


def circle_map_for(surface, axis):
    """주기 좌표축 axis의 각도 사상"""
    if not surface.periodic[axis]:
        raise ValueError(f"{surface.kind}의 {'uv'[axis]}축은 주기적이지 않아 원 값 사상을 만들 수 없습니다")
    start, end = (surface.u_range, surface.v_range)[axis]
    winding = (1, 0) if axis == 0 else (0, 1)
    return CircleMap(surface=surface, axis=axis, lo=start, period=end - start, label=f"angle_{'uv'[axis]}", winding=winding)


def measure_winding(circle_map, nodes=256):
    """
    기저 고리 (u 고리, v 고리)를 따라 f∘X를 한 바퀴 적분한 감김 수

    주기적이지 않은 방향의 고리는 0으로 둡니다.
    """
    surface = circle_map.surface
    result = []
    for axis in (0, 1):
        if not surface.periodic[axis]:
            result.append(0)
            continue
        start, end = (surface.u_range, surface.v_range)[axis]
        other = (surface.v_range, surface.u_range)[axis]
        fixed = 0.5 * (other[0] + other[1])
        loop = start + (end - start) * np.arange(nodes + 1) / nodes
        u, v = (loop, np.full_like(loop, fixed)) if axis == 0 else (np.full_like(loop, fixed), loop)
        values = circle_map.of_points(surface.embed(u, v))
        turns = np.sum(wrap_angle(np.diff(values))) / (2.0 * math.pi)
        result.append(int(round(turns)))
    return tuple(result)


@dataclass
class MassFlowValue:
    """시험 사상 하나에 대한 θ̃ 값"""

    value: float
    map_label: str
    turns: float
    max_step_angle: float
    lifts: np.ndarray = None

    def as_row(self, block_id=1):
        return {
            "block_id": block_id,
            "map": self.map_label,
            "theta": float(self.value),
            "turns": float(self.turns),
            "max_step_angle": float(self.max_step_angle),
        }


def lift_displacements(iso, circle_map):
    """
    입자별 f의 연속 올림 (t0에서 0)의 끝값

    Raises:
        LiftSafetyError: 한 스텝의 감긴 변화량이 LIFT_SAFETY(0.9π)를 넘는 경우
    """
    values = circle_map.of_isotopy(iso)
    steps = wrap_angle(np.diff(values, axis=0))
    biggest = float(np.max(np.abs(steps))) if steps.size else 0.0
    if biggest > config.LIFT_SAFETY:
        k, p = np.unravel_index(int(np.argmax(np.abs(steps))), steps.shape)
        raise LiftSafetyError(
            f"올림 안전 조건 위반: 입자 {p}, 스텝 {k}에서 각도 변화 {biggest:.4f} > {config.LIFT_SAFETY:.4f}. "
            f"더 많은 시간 스텝이 필요합니다 (현재 K={iso.steps})"
        )
    return np.sum(steps, axis=0), biggest


def mass_flow(iso, circle_map, weights):
    """
    θ̃({h_t})(f) = Σ_p w_p · lift_p

    Args:
        iso: Isotopy (입자 = 구적 노드)
        circle_map: CircleMap
        weights: 입자별 측도 가중치 μ

    Returns:
        MassFlowValue
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (iso.particle_count,):
        raise ValueError(f"가중치 개수({weights.size})와 입자 수({iso.particle_count})가 다릅니다")
    lifts, biggest = lift_displacements(iso, circle_map)
    value = float(np.sum(weights * lifts))
    turns = getattr(iso.system.field, "amplitude", 0.0)
    logging.info(f"📊 질량 흐름 θ̃({circle_map.label}) = {value:.10f} (N={turns}, 최대 스텝 각 {biggest:.4f})")
    return MassFlowValue(value=value, map_label=circle_map.label, turns=turns, max_step_angle=biggest, lifts=lifts)


def _df_along(circle_map, u, v, du, dv, h):
    """방향 (du, dv)로의 df를 f∘X의 감긴 중심차분으로 계산합니다."""
    surface = circle_map.surface
    forward = circle_map.of_points(surface.embed(u + h * du, v + h * dv))
    backward = circle_map.of_points(surface.embed(u - h * du, v - h * dv))
    return wrap_angle(forward - backward) / (2.0 * h)


def flux_pairing(field, circle_map, mesh, time_nodes=16):
    """
    ∫_0^1 ∫_M df(V_t) dμ dt

    df(V)는 유클리드 점을 역차트로 되돌려 계산하므로 흐름 적분과 독립적인 경로입니다.
    """
    h = config.FD_STEP_RELATIVE * mesh.surface.chart_scale
    if field.autonomous:
        times, weights = np.array([0.0]), np.array([1.0])
    else:
        x, w = leggauss(time_nodes)
        times, weights = 0.5 * (x + 1.0), 0.5 * w

    total = 0.0
    for t, wt in zip(times, weights):
        vu, vv = field.components(mesh.u, mesh.v, t)
        scale = max(1.0, float(np.max(np.abs(np.concatenate([vu, vv])))))
        step = h / scale
        pairing = _df_along(circle_map, mesh.u, mesh.v, vu, vv, step)
        total += wt * float(np.sum(mesh.weights * pairing))
    logging.info(f"📊 플럭스 쌍대 ∫df(V)dμ = {total:.10f}")
    return total


def df_l2_norm(circle_map, mesh):
    """‖df‖_{L²} = (∫ g^{ij} ∂_i f ∂_j f dμ)^{1/2}"""
    h = config.FD_STEP_RELATIVE * mesh.surface.chart_scale
    one, zero = np.ones_like(mesh.u), np.zeros_like(mesh.u)
    fu = _df_along(circle_map, mesh.u, mesh.v, one, zero, h)
    fv = _df_along(circle_map, mesh.u, mesh.v, zero, one, h)
    g_inv = mesh.metric.g_inv
    density = g_inv[:, 0, 0] * fu * fu + 2.0 * g_inv[:, 0, 1] * fu * fv + g_inv[:, 1, 1] * fv * fv
    return math.sqrt(float(np.sum(mesh.weights * density)))


def normalized_mass_flow(theta, volume, df_norm):
    """‖θ̃‖ = θ̃(f) / (√Vol · ‖df‖_{L²})"""
    if df_norm <= 0.0 or volume <= 0.0:
        return 0.0
    return float(theta) / (math.sqrt(volume) * df_norm)


def duality_check(theta, flux, tolerance=None):
    """|θ̃ − flux| ≤ tol·max(|θ̃|, |flux|)"""
    tolerance = config.TOL_DUALITY if tolerance is None else tolerance
    scale = max(abs(theta), abs(flux))
    error = abs(theta - flux) / scale if scale > 0.0 else 0.0
    return CheckResult(
        name="mass_flow_duality",
        passed=error <= tolerance,
        measured=error,
        bound=tolerance,
        detail=f"θ̃={theta:.10f}, flux={flux:.10f}",
    ).log()


def jensen_chain(j_surface, theta_norm, volume):
    """
    J(h) ≥ (Vol/2)·‖θ̃‖² 검사

    ‖θ̃‖가 normalized_mass_flow로 정규화되어 있으면 이 부등식은 Cauchy–Schwarz 꼴
    ½∫|V|² ≥ ½(∫df(V))²/‖df‖² 와 같습니다. slack = J / 우변 (0 ≥ 0 이면 1).

    Returns:
        CheckResult (measured = slack, bound = 우변)
    """
    rhs = 0.5 * volume * theta_norm * theta_norm
    if rhs <= 0.0:
        slack = 1.0 if j_surface >= 0.0 else 0.0
    else:
        slack = j_surface / rhs
    return CheckResult(
        name="jensen_chain",
        passed=bool(j_surface >= rhs),
        measured=slack,
        bound=rhs,
        detail=f"J={j_surface:.10f}",
    ).log()
