"""
Исключения библиотеки FD Wiretap
"""


class FdWiretapError(Exception):
    """Базовое исключение библиотеки"""


class DimensionMismatch(FdWiretapError):
    """Несовместимые размеры матриц"""


class ZeroDistance(FdWiretapError):
    """Нулевое расстояние между узлами межузлового канала"""


class RankDegenerate(FdWiretapError):
    """Матрица канала не имеет полного ранга (неудачная случайная реализация)"""


class BudgetExceeded(FdWiretapError):
    """Запрошено больше векторов, чем допускает бюджет подмножества"""


class InternalInconsistency(FdWiretapError):
    """Расхождение двух независимых вычислений, которые обязаны совпадать"""


class DegenerateGrid(FdWiretapError):
    """Сетка мощностей слишком мала для оценки наклона"""


class ConfigError(FdWiretapError):
    """Некорректная конфигурация эксперимента"""
