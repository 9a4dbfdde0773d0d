"""
명령줄 테스트

typer CliRunner로 명령을 실행하고 종료 코드(0 통과, 1 검사 실패, 2 설정 오류)와 산출물을 확인합니다.
"""

import os
import sys
import tempfile

# 현재 디렉토리를 Python 경로에 추가
sys.path.insert(0, os.path.dirname(__file__))

from typer.testing import CliRunner

import config
from main import app
from modules.ledger import load_json
from modules.utils import artifact_digest, stage_log

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), "scenarios")

runner = CliRunner()


def test_oracle_passes_and_is_reproducible():
    with tempfile.TemporaryDirectory() as first, tempfile.TemporaryDirectory() as second:
        result = runner.invoke(app, ["oracle", "--out", first])
        print(result.output[-300:])
        assert result.exit_code == 0
        report = load_json(os.path.join(first, config.REPORT_JSON))
        assert report["command"] == "oracle"
        assert all(check["passed"] for check in report["checks"])

        # 출력 폴더만 다르면 보고서는 바이트 단위로 같아야 함
        assert runner.invoke(app, ["oracle", "--out", second]).exit_code == 0
        hashes = [artifact_digest(os.path.join(folder, config.REPORT_JSON)) for folder in (first, second)]
        assert hashes[0] == hashes[1]


def test_compressive_field_fails_checks():
    with tempfile.TemporaryDirectory() as out:
        args = ["verify-field", "--config", os.path.join(SCENARIO_DIR, "compressive.cfg"), "--out", out]
        result = runner.invoke(app, args)
        assert result.exit_code == 1


def test_missing_config_is_precondition_error():
    result = runner.invoke(app, ["energy", "--config", os.path.join(SCENARIO_DIR, "missing.cfg")])
    assert result.exit_code == 2
    result = runner.invoke(app, ["schedule", "--mode", "quadratic"])
    assert result.exit_code == 2


def test_certify_writes_witnesses():
    with tempfile.TemporaryDirectory() as out:
        args = ["certify", "--resolution", "32", "--bound", "1", "--bound", "5", "--out", out]
        result = runner.invoke(app, args)
        print(result.output[-300:])
        assert result.exit_code == 0
        certificate = load_json(os.path.join(out, config.CERTIFICATE_JSON))
        assert certificate["witnesses"] == {"1": 1, "5": 83}
        report = load_json(os.path.join(out, config.REPORT_JSON))
        witness = {c["check"]: c for c in report["checks"] if c["check"].startswith("witness_B")}
        assert witness["witness_B5"]["passed"]
        assert witness["witness_B5"]["measured"] == witness["witness_B5"]["bound"] == 83.0
        assert os.path.exists(os.path.join(out, config.PARTIAL_SUMS_CSV))


def test_certify_is_identical_across_worker_counts():
    """작업자 수만 다른 두 실행의 산출물은 바이트 단위로 같음"""
    with tempfile.TemporaryDirectory() as first, tempfile.TemporaryDirectory() as second:
        codes = []
        for out, workers in ((first, "1"), (second, "2")):
            args = ["certify", "--resolution", "16", "--bound", "1", "--workers", workers, "--out", out]
            result = runner.invoke(app, args)
            print(result.output[-200:])
            codes.append(result.exit_code)
        assert codes[0] == codes[1] and codes[0] in (0, 1)
        for name in (config.REPORT_JSON, config.CERTIFICATE_JSON, config.PARTIAL_SUMS_CSV):
            digests = [artifact_digest(os.path.join(folder, name)) for folder in (first, second)]
            assert digests[0] == digests[1], name
        report = load_json(os.path.join(first, config.REPORT_JSON))
        assert "audit" in report["stages"]


def test_stage_log_is_released_after_report():
    with tempfile.TemporaryDirectory() as out:
        assert runner.invoke(app, ["oracle", "--out", out]).exit_code == 0
        assert runner.invoke(app, ["oracle", "--out", out]).exit_code == 0
        report = load_json(os.path.join(out, config.REPORT_JSON))
        assert report["stages"]["done"] == {"progress": 100, "message": "완료"}
        assert stage_log == {}


def test_version():
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert config.TOOL_VERSION in result.output


def main():
    print("=" * 60)
    print("🖥️ 명령줄 테스트")
    print("=" * 60)
    tests = [
        test_oracle_passes_and_is_reproducible,
        test_compressive_field_fails_checks,
        test_missing_config_is_precondition_error,
        test_certify_writes_witnesses,
        test_certify_is_identical_across_worker_counts,
        test_stage_log_is_released_after_report,
        test_version,
    ]
    for test in tests:
        print(f"\n▶ {test.__name__}")
        test()
    print("\n" + "=" * 60)
    print("✅ 모든 테스트 통과")
    print("=" * 60)


if __name__ == "__main__":
    main()
