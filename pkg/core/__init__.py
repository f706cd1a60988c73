"""
Модуль core - построение прекодеров, оценка скоростей и эксперименты
"""
