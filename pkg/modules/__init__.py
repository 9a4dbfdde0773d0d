"""
Stirlab 계산 모듈 패키지
"""
