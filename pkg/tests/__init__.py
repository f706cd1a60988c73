"""
Модуль тестов для FD Wiretap
"""
