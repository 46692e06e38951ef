"""src 패키지"""
