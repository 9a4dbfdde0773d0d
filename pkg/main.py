"""
Stirlab - 무한 운동 에너지 등위상 수치 검증 도구

명령:
- verify-field: 벡터장 발산/지지/제한 검사
- energy: 곡면·관상 에너지, 관상 하한, 닮음 스케일링
- massflow: 질량 흐름 θ̃, 플럭스 쌍대, Jensen 사슬
- block: 단일 블록 전체 파이프라인
- schedule: 공 배치와 회전 수 선택
- certify: 발산 인증서
- oracle: 평면 고리 기준값

종료 코드: 0 모든 검사 통과, 1 검사 실패, 2 설정/전제 조건 오류
"""

# =============================================================================
# Import: 표준 라이브러리
# =============================================================================
import logging
from typing import List, Optional

import typer
from dotenv import load_dotenv

# =============================================================================
# Import: 프로젝트 모듈
# =============================================================================
import config
from modules.blocks import ScheduleLengthError
from modules.flow import FlowDomainError
from modules.pipeline import run
from modules.scenario import load_scenario

# =============================================================================
# 환경 설정
# =============================================================================
load_dotenv()

logging.basicConfig(level=logging.INFO, format='%(levelname)s:%(name)s:%(message)s')

app = typer.Typer(add_completion=False, help="무한 운동 에너지 등위상 수치 검증 도구")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_PRECONDITION = 2

ConfigOption = typer.Option(None, "--config", help="시나리오 파일 (key=value)")
ModeOption = typer.Option(None, "--mode", help="스케일링 지수 모드: derived | paper")
OutOption = typer.Option(None, "--out", help="출력 폴더")
BlocksOption = typer.Option(None, "--blocks", help="블록 수")
BoundOption = typer.Option(None, "--bound", help="발산 하한 B (여러 번 지정 가능)")
ResolutionOption = typer.Option(None, "--resolution", help="곡면 구적 해상도")
SeedOption = typer.Option(None, "--seed", help="표본 시드")
WorkersOption = typer.Option(None, "--workers", help="감사 작업자 수")


def _execute(command, config_path, mode, out, blocks, bound, resolution, seed, workers):
    """시나리오를 읽고 파이프라인을 실행한 뒤 종료 코드를 돌려줍니다."""
    overrides = {
        "exponent_mode": mode,
        "output": out,
        "blocks": blocks,
        "bounds": list(bound) if bound else None,
        "resolution": resolution,
        "seed": seed,
        "workers": workers,
    }
    try:
        scenario = load_scenario(config_path, overrides)
        result = run(command, scenario)
    except (ScheduleLengthError, FlowDomainError) as e:
        logging.error(f"❌ {command} 실패: {e}")
        return EXIT_CHECK_FAILED
    except ValueError as e:
        logging.error(f"❌ 설정/전제 조건 오류: {e}")
        return EXIT_PRECONDITION

    print("=" * 60)
    print(f"📋 {command} 결과 (config_hash={scenario.fingerprint()[:12]})")
    print("=" * 60)
    for check in result.checks:
        mark = "✅" if check.passed else "❌"
        print(f"  {mark} {check.name}: {check.measured:.6e} (기준 {check.bound:.6e})")
    for key, value in result.results.items():
        print(f"  📊 {key}: {value}")
    print("=" * 60)
    for path in result.artifacts:
        print(f"  📦 {path}")
    if not result.passed:
        print(f"❌ 실패한 검사: {', '.join(result.failed)}")
        return EXIT_CHECK_FAILED
    print("✅ 모든 검사 통과")
    return EXIT_OK


def _command(name):
    def handler(
        config_path: Optional[str] = ConfigOption,
        mode: Optional[str] = ModeOption,
        out: Optional[str] = OutOption,
        blocks: Optional[int] = BlocksOption,
        bound: Optional[List[float]] = BoundOption,
        resolution: Optional[int] = ResolutionOption,
        seed: Optional[int] = SeedOption,
        workers: Optional[int] = WorkersOption,
    ):
        code = _execute(name, config_path, mode, out, blocks, bound, resolution, seed, workers)
        raise typer.Exit(code=code)

    handler.__name__ = name.replace("-", "_")
    handler.__doc__ = COMMAND_HELP[name]
    return handler


COMMAND_HELP = {
    "verify-field": "벡터장 발산, 띠 지지, 관상 확장 검사",
    "energy": "곡면/관상 에너지와 스케일링 법칙 검사",
    "massflow": "질량 흐름, 플럭스 쌍대, Jensen 사슬 검사",
    "block": "단일 블록: 벡터장 → 확장 → 적분 → 에너지 → 질량 흐름 → 하한",
    "schedule": "공 배치와 블록별 회전 수 표",
    "certify": "발산 인증서 생성과 앞 블록 감사",
    "oracle": "평면 고리 기준값 (넓이, J, θ̃)",
}

for _name in COMMAND_HELP:
    app.command(name=_name)(_command(_name))


@app.command()
def version():
    """도구와 스키마 버전"""
    print(f"{config.TOOL_VERSION} (schema {config.SCHEMA_VERSION})")


# =============================================================================
# 메인 실행
# =============================================================================
if __name__ == "__main__":
    app()
