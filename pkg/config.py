"""
설정 파일
"""
import os
import math
from dotenv import load_dotenv

# 환경 변수 로드
load_dotenv()

# 버전 정보 (인증서/원장 헤더에 기록)
TOOL_VERSION = "0.4.0"
SCHEMA_VERSION = 1

# 디렉토리 설정
OUTPUT_FOLDER = os.getenv("OUTPUT_FOLDER", "output")

# 산출물 파일 이름
ENERGY_LEDGER_CSV = "energy_ledger.csv"
MASSFLOW_LEDGER_CSV = "massflow_ledger.csv"
FIELD_SAMPLES_CSV = "field_samples.csv"
TRAJECTORY_CSV = "trajectories.csv"
SCHEDULE_CSV = "schedule.csv"
PARTIAL_SUMS_CSV = "partial_sums.csv"
CERTIFICATE_JSON = "certificate.json"
REPORT_JSON = "report.json"

# 허용된 곡면 종류
AVAILABLE_SURFACE_KINDS = [
    "torus_revolution",
    "flat_strip",
    "flat_annulus",
    "sphere",
    "implicit",
]
AVAILABLE_IMPLICIT_LEVELS = ["torus", "squashed_torus"]
AVAILABLE_FIELD_KINDS = ["stirring", "gradient", "compressive"]
AVAILABLE_PROFILES = ["bump", "rigid"]
AVAILABLE_EXTENSION_MODES = ["corrected", "product"]
AVAILABLE_EXPONENT_MODES = ["derived", "paper"]

# 유한차분 설정
FD_STEP_RELATIVE = 1e-5  # 계량 계산 스텝 (chart scale 배)
FD_CURVATURE_STEP_RELATIVE = 1e-4  # 2계 도함수 스텝 (chart scale 배)
FD_GRADIENT_STEP = 1e-6  # 변분 방정식용 속도 기울기 스텝 (좌표 단위)
DIVERGENCE_STEP_PER_DELTA = 4e-6  # 3차원 발산 오라클 스텝 (δ 배)
FD_DIVERGENCE_STEP = 1e-5  # 곡면 내재 발산 스텝 (chart scale 배)

# 관상 근방 허용 폭: δ ≤ 0.1/κ_max
TUBE_ADMISSIBILITY = 0.1

# 음함수 곡면 사영 반복 횟수
PROJECTION_ITERATIONS = 12
NEWTON_ITERATIONS = 8

# 허용 오차
TOL_DIV = 1e-6  # 곡면 발산 (1/time)
TOL_DIV_AMBIENT = 1e-5  # 공간 발산 (max|V|/length 배)
TOL_VOL = 1e-6  # 부피 결손
TOL_DUALITY = 1e-4  # 질량 흐름 / 플럭스 상대 오차
PRODUCT_MODE_DEFECT_FACTOR = 3.0  # 곱 모드 결손 한계 (δ·κ_max·max|V| 배)

# 구적 설정
MIN_PERIODIC_NODES = 8
NORMAL_NODES_PER_PIECE = 8
DEFAULT_RESOLUTION = 64

# 적분 설정
STEPS_PER_TURN = 512  # 부피 검증용 K = 512·N
MIN_STEPS_PER_TURN = 64  # 올림 안전 조건 K ≥ 64·N
LIFT_SAFETY = 0.9 * math.pi  # 한 스텝당 허용 각도 변화

# 교반장 기본값
DEFAULT_ANGULAR_SPEED = 2.0 * math.pi  # 한 단위 시간에 한 바퀴
DEFAULT_RAMP_FRACTION = 0.15

# 블록 설정
DEFAULT_BALL_RADIUS = 4.0  # 표준 블록을 담는 공의 반지름 R
AUDITED_BLOCKS = 3
MAX_TURN_BITS = 1 << 17  # N(j)의 최대 비트 수
CERTIFICATE_DPS = 60  # 인증서 부분합 정밀도 (십진 자릿수)
CERTIFICATE_TABLE_BLOCKS = 100  # 인증서 JSON에 N(j)를 그대로 기록하는 블록 수
DEFAULT_MAX_BLOCKS = 20000
DEFAULT_BOUNDS = [1.0, 2.0, 5.0]

# 재현성
DEFAULT_SEED = 20240601
