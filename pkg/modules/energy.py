"""
에너지 모듈 - 작용(총 운동 에너지) J = ½∫₀¹‖V_t‖²_{L²} dt 와 관상/닮음 스케일링 검사
"""
import logging
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

import config
from modules.fields import AmbientField, TangentField, cutoff
from modules.geometry import (
    QuadratureMesh,
    TubeMesh,
    build_quadrature,
    build_tube_quadrature,
    normal_quadrature,
)
from modules.utils import CheckResult

TIME_NODES = 16


@dataclass
class EnergyReport:
    """J 값과 반분해능 재계산으로 얻은 오차 추정"""

    value: float
    domain: str
    resolution: tuple
    refinement_error: float
    label: str = ""
    turns: float = 1.0
    delta: float = 0.0
    scale: float = 1.0
    mode: str = ""

    def as_row(self, block_id=1):
        return {
            "block_id": block_id,
            "domain": self.domain,
            "field": self.label,
            "J": float(self.value),
            "mode": self.mode,
            "lambda": float(self.scale),
            "delta": float(self.delta),
            "N": float(self.turns),
            "resolution": "x".join(str(r) for r in self.resolution),
            "refinement_error": float(self.refinement_error),
        }


# =============================================================================
# 구적
# =============================================================================
def tube_quadrature(chart, resolution, nodes_per_piece=None):
    """관상 근방 구적 격자 (곡면 격자 × 법선 방향 구간별 Gauss–Legendre)"""
    return build_tube_quadrature(chart, resolution, nodes_per_piece)


def cutoff_l2_mass(delta):
    """∫_{−δ}^{δ} η(|s|)² ds (구간별 Gauss–Legendre, η²가 다항식이라 정확)"""
    nodes, weights = normal_quadrature(delta)
    return float(np.sum(weights * cutoff(np.abs(nodes), delta) ** 2))


def _time_average(field, evaluate):
    if field.autonomous:
        return evaluate(0.0)
    x, w = leggauss(TIME_NODES)
    return sum(0.5 * wk * evaluate(0.5 * (xk + 1.0)) for xk, wk in zip(x, w))


def _energy_value(field, mesh, idealized=False):
    if isinstance(mesh, TubeMesh):
        if not isinstance(field, AmbientField):
            raise TypeError("관상 격자에는 AmbientField가 필요합니다")
        weights = mesh.idealized_weights if idealized else mesh.weights

        def evaluate(t):
            vectors = field.at_chart(mesh.u, mesh.v, mesh.s, t)
            return 0.5 * float(np.sum(weights * np.sum(vectors * vectors, axis=-1)))

    elif isinstance(mesh, QuadratureMesh):
        if not isinstance(field, TangentField):
            raise TypeError("곡면 격자에는 TangentField가 필요합니다")

        def evaluate(t):
            speed2 = field.speed_squared(mesh.u, mesh.v, t, metric=mesh.metric)
            return 0.5 * float(np.sum(mesh.weights * speed2))

    else:
        raise TypeError(f"지원하지 않는 격자 형식: {type(mesh).__name__}")
    return _time_average(field, evaluate)


def _coarser(mesh):
    surface_mesh = mesh.surface_mesh if isinstance(mesh, TubeMesh) else mesh
    coarse = []
    for count, periodic in zip(surface_mesh.resolution, surface_mesh.surface.periodic):
        floor = config.MIN_PERIODIC_NODES if periodic else 1
        coarse.append(max(floor, count // 2))
    coarse = tuple(coarse)
    if coarse == tuple(surface_mesh.resolution):
        return None
    if isinstance(mesh, TubeMesh):
        pieces = len(mesh.normal_nodes) // 5
        return build_tube_quadrature(mesh.chart, coarse, pieces)
    return build_quadrature(mesh.surface, coarse)


def kinetic_energy(field, mesh, refine=True, idealized=False):
    """
    J = ½∫|V|² dμ (시간 의존 대조군이면 시간 평균 포함)

    Args:
        field: TangentField (곡면 격자) 또는 AmbientField (관상 격자)
        mesh: QuadratureMesh 또는 TubeMesh
        refine: 반분해능 격자로 다시 계산해 오차 추정을 붙일지 여부
        idealized: 관상 격자에서 det DΦ 대신 이상화 야코비안 1을 쓸지 여부

    Returns:
        EnergyReport
    """
    value = _energy_value(field, mesh, idealized)
    error = 0.0
    if refine:
        coarse = _coarser(mesh)
        if coarse is not None:
            error = abs(value - _energy_value(field, coarse, idealized))

    is_tube = isinstance(mesh, TubeMesh)
    surface_mesh = mesh.surface_mesh if is_tube else mesh
    report = EnergyReport(
        value=value,
        domain=("tube" if is_tube else "surface") + f":{surface_mesh.surface.kind}",
        resolution=tuple(surface_mesh.resolution),
        refinement_error=error,
        label=field.base.label if is_tube else field.label,
        turns=float(getattr(field, "amplitude", 1.0)),
        delta=float(mesh.chart.delta) if is_tube else 0.0,
        scale=float(surface_mesh.surface.params.get("homothety", 1.0)),
        mode=getattr(field, "mode", "") + ("/idealized" if idealized and is_tube else ""),
    )
    logging.info(f"📊 운동 에너지 J = {value:.10e} ({report.domain}, 해상도 {report.resolution}, 오차 추정 {error:.2e})")
    return report


# =============================================================================
# 관상 하한과 닮음 스케일링
# =============================================================================
@dataclass
class TubularEnergyCheck:
    passed: bool
    ratio: float
    bound: float
    expected_ratio: float

    def check(self):
        return CheckResult(
            name="tubular_lower_bound",
            passed=self.passed,
            measured=self.ratio,
            bound=self.bound,
            detail=f"예상 비율 ∫η² ds = {self.expected_ratio:.10f}",
        )


def tubular_energy_check(j_ambient, j_surface, delta, codimension=1):
    """
    J_ambient ≥ ½·δ^{n−m}·J_surface 검사

    Returns:
        TubularEnergyCheck (ratio = J_ambient/J_surface, expected_ratio = ∫η² ds)
    """
    bound = 0.5 * delta ** codimension
    ratio = j_ambient / j_surface if j_surface > 0.0 else 0.0
    expected = cutoff_l2_mass(delta) if codimension == 1 else float("nan")
    passed = bool(j_ambient >= bound * j_surface)
    mark = "✅" if passed else "❌"
    logging.info(f"{mark} 관상 하한: 비율 {ratio:.10f} ≥ {bound:.6e} (평면 예측 {expected:.10f})")
    return TubularEnergyCheck(passed=passed, ratio=ratio, bound=bound, expected_ratio=expected)


def scaling_exponent(mode="derived", dimension=3):
    """derived: n+2 (속도 λ배, 부피 λⁿ배), paper: 2n"""
    if mode == "derived":
        return dimension + 2
    if mode == "paper":
        return 2 * dimension
    raise ValueError(f"지원하지 않는 지수 모드: {mode} (가능: {config.AVAILABLE_EXPONENT_MODES})")


def scaled_energy(j_value, scale, mode="derived", dimension=3):
    """닮음비 λ 블록의 에너지 λ^e·J"""
    if not 0.0 < scale <= 1.0:
        raise ValueError(f"닮음비는 (0, 1]에 있어야 합니다: λ={scale}")
    return j_value * scale ** scaling_exponent(mode, dimension)
